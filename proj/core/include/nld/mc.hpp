#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "nld/geometry.hpp"
#include "nld/levy.hpp"

namespace nld {

/// Compound-Poisson simulation data for a finite-rate jump process: holding
/// times Exponential(rate), jumps drawn from nu_sim / rate.
class JumpProcessSpec {
 public:
  /// Build from a measure: atomic measures are simulable directly; radial
  /// (or mixed) measures are truncated below delta to reach a finite rate.
  /// An atomic far tail keeps its exact rate; its jump destinations are
  /// placed at a synthetic far radius (immediate exit for bounded domains).
  static JumpProcessSpec from_measure(const LevyMeasure& nu, double delta = 0);

  double total_rate() const { return rate_; }
  int dim() const { return dim_; }
  double truncation() const { return delta_; }
  Point sample_jump(uint64_t& rng_state) const;

 private:
  int dim_ = 1;
  double rate_ = 0;
  double delta_ = 0;
  // atomic part: flattened atoms (both signs) with cumulative weights
  std::vector<Point> atom_points_;
  std::vector<double> atom_cum_;
  double far_mass_ = 0;
  double far_radius_ = 0;
  // radial parts: inverse-CDF tables per component
  struct RadialSampler {
    double mass;
    double alpha = 0;   // closed-form inversion when > 0 (pure power law)
    double delta = 0;
    std::vector<double> radii;   // log-spaced table
    std::vector<double> cum;     // cumulative mass, cum.back() == mass
  };
  std::vector<RadialSampler> radial_;
  std::vector<double> part_cum_;  // top-level choice: atoms, far tail, radial parts
};

struct McEstimate {
  double estimate = 0;
  double std_error = 0;
  long n_paths = 0;
  uint64_t seed = 0;
  double mean_jumps = 0;
  double max_jumps = 0;
};

/// Sample mean of the first exit time from the domain, starting at x0.
/// Paths exceeding `path_cap` jumps abort the run with diagnostics.
McEstimate mean_exit_time(const JumpProcessSpec& spec, const Domain& omega, const Point& x0,
                          long n_paths, uint64_t seed, long path_cap = 1000000);

/// Monte Carlo of  E^x[ g(X_tau) ] + E^x[ ∫_0^tau f(X_t) dt ]  (with this sign
/// the choice f = 1, g = 0 reproduces the mean exit time).
McEstimate feynman_kac(const JumpProcessSpec& spec, const Domain& omega, const Point& x0,
                       const std::function<double(Point)>& f,
                       const std::function<double(Point)>& g, long n_paths, uint64_t seed,
                       long path_cap = 1000000);

}  // namespace nld
