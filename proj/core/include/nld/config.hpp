#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nld/geometry.hpp"
#include "nld/grid.hpp"
#include "nld/levy.hpp"

namespace nld {

/// Analytic or tabulated scalar field (the f and g data of a problem).
struct FieldSpec {
  std::function<double(Point)> fn = [](Point) { return 0.0; };
  std::string echo;  // the originating JSON fragment
};

struct GridSpec {
  double h = 0.1;
  double r_trunc = 2.0;
  Basis basis = Basis::P0;
};

struct McSpec {
  Point x0{0.5, 0};
  long n_paths = 100000;
  double delta = 0;  // small-jump truncation for radial measures
  long path_cap = 1000000;
};

/// One acceptance assertion attached to a config; evaluated by run_config.
struct Expectation {
  std::string kind;  // uniform_value | value_at | lambda_min | mc_value |
                     // mc_matches_solution | linf_holds | max_principle | energy_value
  Point x{0, 0};
  double value = 0;
  double tol = 0;
  double nsigma = 0;
};

struct RunConfig {
  std::shared_ptr<const LevyMeasure> measure;
  std::shared_ptr<const Domain> domain;
  GridSpec grid;
  FieldSpec f, g;
  std::vector<std::string> tasks;  // solve poincare barrier bounds extend mc
  uint64_t seed = 1;
  double solver_tol = 1e-10;
  int verify_trials = 20;
  McSpec mc;
  std::vector<double> eps_schedule;  // bounds task; defaults to 2^-2 .. 2^-8
  std::vector<Expectation> expects;
  std::string echo;  // original config text
};

/// Parse a config from JSON text. ConfigError carries a position-annotated
/// message on malformed input or out-of-range parameters.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

/// Parse just a measure / domain / field spec (used by tools and tests).
std::shared_ptr<const LevyMeasure> parse_measure(const std::string& json_text);
std::shared_ptr<const Domain> parse_domain(const std::string& json_text);

struct RunResult {
  int exit_code = 0;  // 0 all checks pass, 5 when an assertion fails
  std::vector<std::pair<bool, std::string>> checks;
  std::string report_json;   // deterministic (no timings)
  std::string summary_text;  // one PASS/FAIL line per check
};

/// Execute the config's tasks, writing solution.csv, report.json and
/// summary.txt under out_dir (out_dir empty: no files). Throws the library's
/// error types for spec/admissibility/solver failures.
RunResult run_config(const RunConfig& cfg, const std::string& out_dir);

}  // namespace nld
