// nld - nonlocal Dirichlet solver CLI
//
//   nld <task> --config <path> [--seed N] [--out DIR]
//   nld verify-all --config <dir> [--out DIR]
//
// Tasks: solve, poincare, barrier, bounds, extend, mc. The task overrides the
// config's task list; verify-all runs every *.json config under a directory
// and exits 0 iff all of their checks pass.
//
// Exit codes: 0 ok, 2 config error, 3 basis admissibility, 4 solver failure,
// 5 failed assertion, 1 other error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "nld/config.hpp"
#include "nld/errors.hpp"

namespace {

int run_one(nld::RunConfig cfg, const std::string& task, const std::string& out_dir,
            std::optional<uint64_t> seed) {
  if (!task.empty() && task != "run") cfg.tasks = {task};
  if (cfg.tasks.empty()) {
    std::cout << "no tasks requested; nothing to do\n";
    return 0;
  }
  if (seed) cfg.seed = *seed;
  nld::RunResult res = nld::run_config(cfg, out_dir);
  std::cout << res.summary_text;
  return res.exit_code;
}

int dispatch(const std::string& task, const std::string& config_path, const std::string& out_dir,
             std::optional<uint64_t> seed) {
  try {
    if (task == "verify-all") {
      namespace fs = std::filesystem;
      std::vector<fs::path> configs;
      if (fs::is_directory(config_path)) {
        for (const auto& e : fs::directory_iterator(config_path))
          if (e.path().extension() == ".json") configs.push_back(e.path());
        std::sort(configs.begin(), configs.end());
      } else {
        configs.push_back(config_path);
      }
      if (configs.empty()) {
        std::cerr << "verify-all: no configs under " << config_path << "\n";
        return 2;
      }
      int worst = 0;
      for (const auto& p : configs) {
        std::cout << "== " << p.filename().string() << "\n";
        std::string sub = out_dir.empty() ? "" : out_dir + "/" + p.stem().string();
        int rc = run_one(nld::load_config_file(p.string()), "", sub, seed);
        worst = std::max(worst, rc);
      }
      std::cout << (worst == 0 ? "verify-all: PASS\n" : "verify-all: FAIL\n");
      return worst;
    }
    return run_one(nld::load_config_file(config_path), task, out_dir, seed);
  } catch (const nld::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nld::AdmissibilityError& e) {
    std::cerr << "admissibility error: " << e.what() << "\n";
    return 3;
  } catch (const nld::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak Dirichlet problems for symmetric Levy-type nonlocal operators"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<uint64_t> seed;

  std::vector<std::string> tasks = {"run",    "solve",  "poincare",  "barrier",
                                    "bounds", "extend", "mc",        "verify-all"};
  std::string chosen;
  for (const auto& t : tasks) {
    auto* sub = app.add_subcommand(t, t == "run" ? "run the config's own task list"
                                                 : (t == "verify-all" ? "run a config corpus"
                                                                      : "run the " + t + " task"));
    sub->add_option("--config", config_path, "config JSON (or directory for verify-all)")
        ->required();
    sub->add_option("--out", out_dir, "output directory for artifacts");
    sub->add_option("--seed", seed, "override the master seed");
    sub->callback([&chosen, t]() { chosen = t; });
  }

  CLI11_PARSE(app, argc, argv);
  return dispatch(chosen == "run" ? "" : chosen, config_path, out_dir, seed);
}
