#include "nld/config.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nld/errors.hpp"
#include "nld/extension.hpp"
#include "nld/form.hpp"
#include "nld/mc.hpp"
#include "nld/principles.hpp"
#include "nld/solve.hpp"

namespace nld {

using nlohmann::json;

namespace {

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

Point parse_point(const json& j, int dim) {
  if (j.is_number()) return pt(j.get<double>());
  if (!j.is_array() || j.size() < 1 || int(j.size()) > 2)
    throw ConfigError("expected a coordinate or [x1, x2]");
  Point p{j[0].get<double>(), j.size() > 1 ? j[1].get<double>() : 0.0};
  if (dim == 1 && p[1] != 0) throw ConfigError("1-D point with a second coordinate");
  return p;
}

std::shared_ptr<const LevyMeasure> measure_from_json(const json& j);

LevyMeasure measure_value(const json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "atomic") {
    int dim = j.value("dim", 1);
    std::vector<std::pair<Point, double>> atoms;
    for (const auto& a : j.at("atoms")) {
      if (!a.is_array() || a.size() != 2) throw ConfigError("atomic: entries must be [point, weight]");
      atoms.emplace_back(parse_point(a[0], dim), a[1].get<double>());
    }
    FarTail far;
    if (j.contains("far_tail")) {
      far.mass = j["far_tail"].at("mass").get<double>();
      far.radius = j["far_tail"].at("radius").get<double>();
    }
    return LevyMeasure::atomic(atoms, dim, far);
  }
  if (type == "zeta") {
    return LevyMeasure::zeta_series(j.value("K", 200));
  }
  if (type == "fractional") {
    double alpha = j.at("alpha").get<double>();
    if (!(alpha > 0 && alpha < 2)) throw ConfigError("fractional: alpha must lie in (0,2)");
    return LevyMeasure::radial(RadialKernel::fractional_stable(alpha, j.value("dim", 1)));
  }
  if (type == "tempered") {
    double alpha = j.at("alpha").get<double>();
    if (!(alpha > 0 && alpha < 2)) throw ConfigError("tempered: alpha must lie in (0,2)");
    return LevyMeasure::radial(
        RadialKernel::tempered(alpha, j.at("decay").get<double>(), j.value("dim", 1)));
  }
  if (type == "compact") {
    std::string profile = j.value("profile", "quadratic-cap");
    if (profile != "quadratic-cap") throw ConfigError("compact: unknown profile " + profile);
    return LevyMeasure::radial(
        RadialKernel::compact_quadratic_cap(j.at("r1").get<double>(), j.value("dim", 1)));
  }
  if (type == "mixture") {
    std::vector<LevyMeasure> parts;
    for (const auto& p : j.at("parts")) parts.push_back(measure_value(p));
    return LevyMeasure::mixture(std::move(parts));
  }
  throw ConfigError("unknown measure type: " + type);
}

std::shared_ptr<const LevyMeasure> measure_from_json(const json& j) {
  return std::make_shared<LevyMeasure>(measure_value(j));
}

std::shared_ptr<const Domain> domain_from_json(const json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "interval")
    return std::make_shared<Domain>(
        Domain::interval(j.at("a").get<double>(), j.at("b").get<double>()));
  if (type == "box")
    return std::make_shared<Domain>(Domain::box(parse_point(j.at("lo"), 2), parse_point(j.at("hi"), 2)));
  if (type == "disk") {
    Point c = j.contains("center") ? parse_point(j["center"], 2) : Point{0, 0};
    return std::make_shared<Domain>(Domain::disk(c, j.at("r").get<double>()));
  }
  if (type == "c11") {
    std::string boundary = j.value("boundary", "disk");
    if (boundary == "disk") {
      Point c = j.contains("center") ? parse_point(j["center"], 2) : Point{0, 0};
      return std::make_shared<Domain>(Domain::disk(c, j.at("r").get<double>()));
    }
    if (boundary == "polar-graph") {
      PolarGraph g;
      g.base = j.value("base", 1.0);
      if (j.contains("fourier"))
        for (const auto& f : j["fourier"])
          g.fourier.push_back({f[0].get<double>(), f[1].get<double>()});
      return std::make_shared<Domain>(Domain::polar_graph(g));
    }
    throw ConfigError("c11: unknown boundary kind " + boundary);
  }
  throw ConfigError("unknown domain type: " + type);
}

FieldSpec field_from_json(const json& j) {
  FieldSpec fs;
  fs.echo = j.dump();
  std::string type = j.at("type").get<std::string>();
  if (type == "constant") {
    double v = j.at("value").get<double>();
    fs.fn = [v](Point) { return v; };
    return fs;
  }
  if (type == "indicator") {
    auto dom = domain_from_json(j.at("domain"));
    double v = j.value("value", 1.0);
    fs.fn = [dom, v](Point x) { return dom->contains(x) ? v : 0.0; };
    return fs;
  }
  if (type == "polynomial") {
    std::vector<double> coeffs = j.at("coeffs").get<std::vector<double>>();
    fs.fn = [coeffs](Point x) {
      double r = x[1] == 0 ? x[0] : norm2(x);
      double acc = 0, p = 1;
      for (double c : coeffs) {
        acc += c * p;
        p *= r;
      }
      return acc;
    };
    return fs;
  }
  if (type == "gaussian") {
    Point c = j.contains("center") ? parse_point(j["center"], 2) : Point{0, 0};
    double s = j.value("sigma", 1.0);
    double a = j.value("amplitude", 1.0);
    fs.fn = [c, s, a](Point x) {
      Point d = x - c;
      return a * std::exp(-dot(d, d) / (2 * s * s));
    };
    return fs;
  }
  if (type == "csv") {
    std::string path = j.at("path").get<std::string>();
    std::ifstream in(path);
    if (!in) throw ConfigError("csv field: cannot open " + path);
    auto pts = std::make_shared<std::vector<std::pair<Point, double>>>();
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      std::vector<double> vals;
      double v;
      while (ls >> v) vals.push_back(v);
      if (vals.size() == 2) pts->push_back({pt(vals[0]), vals[1]});
      else if (vals.size() == 3) pts->push_back({{vals[0], vals[1]}, vals[2]});
    }
    if (pts->empty()) throw ConfigError("csv field: no rows in " + path);
    fs.fn = [pts](Point x) {
      double best = 1e300, val = 0;
      for (const auto& [p, v] : *pts) {
        double d = dot(x - p, x - p);
        if (d < best) {
          best = d;
          val = v;
        }
      }
      return val;
    };
    return fs;
  }
  throw ConfigError("unknown field type: " + type);
}

}  // namespace

std::shared_ptr<const LevyMeasure> parse_measure(const std::string& text) {
  return measure_from_json(parse_json(text));
}

std::shared_ptr<const Domain> parse_domain(const std::string& text) {
  return domain_from_json(parse_json(text));
}

RunConfig parse_config(const std::string& text) {
  json j = parse_json(text);
  RunConfig cfg;
  cfg.echo = text;
  try {
    cfg.measure = measure_from_json(j.at("measure"));
    cfg.domain = domain_from_json(j.at("domain"));
    if (cfg.measure->dim() != cfg.domain->dim())
      throw ConfigError("measure and domain dimensions differ");
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      cfg.grid.h = g.value("h", cfg.grid.h);
      cfg.grid.r_trunc = g.value("r_trunc", cfg.grid.r_trunc);
      std::string basis = g.value("basis", "P0");
      if (basis == "P0") cfg.grid.basis = Basis::P0;
      else if (basis == "P1") cfg.grid.basis = Basis::P1;
      else throw ConfigError("grid.basis must be P0 or P1");
    }
    if (j.contains("problem")) {
      if (j["problem"].contains("f")) cfg.f = field_from_json(j["problem"]["f"]);
      if (j["problem"].contains("g")) cfg.g = field_from_json(j["problem"]["g"]);
    }
    if (j.contains("tasks")) cfg.tasks = j["tasks"].get<std::vector<std::string>>();
    if (j.contains("seeds")) cfg.seed = j["seeds"].value("master", 1);
    if (j.contains("tolerances")) cfg.solver_tol = j["tolerances"].value("solver", 1e-10);
    if (j.contains("verify_trials")) cfg.verify_trials = j["verify_trials"].get<int>();
    if (j.contains("mc")) {
      const auto& m = j["mc"];
      if (m.contains("x0")) cfg.mc.x0 = parse_point(m["x0"], cfg.domain->dim());
      cfg.mc.n_paths = m.value("n_paths", cfg.mc.n_paths);
      cfg.mc.delta = m.value("delta", cfg.mc.delta);
      cfg.mc.path_cap = m.value("path_cap", cfg.mc.path_cap);
    }
    if (j.contains("bounds") && j["bounds"].contains("eps_schedule"))
      cfg.eps_schedule = j["bounds"]["eps_schedule"].get<std::vector<double>>();
    if (cfg.eps_schedule.empty())
      for (int k = 2; k <= 8; ++k) cfg.eps_schedule.push_back(std::ldexp(1.0, -k));
    if (j.contains("expect")) {
      for (const auto& [key, e] : j["expect"].items()) {
        Expectation ex;
        ex.kind = key;
        if (e.is_object()) {
          if (e.contains("x")) ex.x = parse_point(e["x"], cfg.domain->dim());
          ex.value = e.value("value", 0.0);
          ex.tol = e.value("tol", 0.0);
          ex.nsigma = e.value("nsigma", 0.0);
        }
        cfg.expects.push_back(ex);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config structure error: ") + e.what());
  }
  return cfg;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_solution_csv(const std::string& path, const GridFunction& u) {
  std::ofstream out(path);
  const Grid& g = *u.grid;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point p = g.coord(i);
    out << fmt17(p[0]);
    if (g.dim == 2) out << "," << fmt17(p[1]);
    out << "," << fmt17(u.coeffs[i]) << "\n";
  }
}

}  // namespace

RunResult run_config(const RunConfig& cfg, const std::string& out_dir) {
  RunResult res;
  json report;
  report["config"] = parse_json(cfg.echo.empty() ? "{}" : cfg.echo);
  auto check = [&](bool ok, const std::string& name, const std::string& detail = "") {
    res.checks.emplace_back(ok, name + (detail.empty() ? "" : " " + detail));
    if (!ok) res.exit_code = 5;
  };

  bool needs_form = false;
  for (const auto& t : cfg.tasks)
    if (t != "mc") needs_form = true;

  std::shared_ptr<Grid> grid;
  std::unique_ptr<FormMatrix> fm;
  if (needs_form) {
    grid = std::make_shared<Grid>(
        make_grid(cfg.domain, cfg.grid.h, cfg.grid.r_trunc, cfg.grid.basis, cfg.measure.get()));
    fm = std::make_unique<FormMatrix>(assemble(cfg.measure, grid));
    report["grid"] = {{"h", cfg.grid.h},
                      {"r_trunc", cfg.grid.r_trunc},
                      {"basis", cfg.grid.basis == Basis::P0 ? "P0" : "P1"},
                      {"dofs", grid->size()},
                      {"interior_dofs", grid->interior_count()},
                      {"kappa", fm->kappa},
                      {"eps_pv", fm->eps_pv},
                      {"assembly_error", fm->assembly_error}};
  }

  std::optional<SolveReport> solved;
  GridFunction fvals, gvals;
  if (fm) {
    fvals = GridFunction::sample_interior(grid, cfg.f.fn);
    gvals = GridFunction::sample_halo(grid, cfg.g.fn);
  }

  auto ensure_solved = [&]() {
    if (solved) return;
    SolveOptions opt;
    opt.cg_tol = cfg.solver_tol;
    solved = solve(*fm, fvals, gvals, opt);
    double resid = verify_weak_identity(*solved, *fm, fvals, cfg.verify_trials, cfg.seed);
    json js;
    js["iterations"] = solved->iterations;
    js["residual_norm"] = solved->residual_norm;
    js["energy"] = solved->energy;
    js["weak_identity_residual"] = resid;
    double umin = solved->solution.coeffs.minCoeff(), umax = solved->solution.coeffs.maxCoeff();
    js["min"] = umin;
    js["max"] = umax;
    report["solve"] = js;
    check(resid <= std::max(1e4 * cfg.solver_tol, 1e-8), "weak_identity", fmt17(resid));
  };

  for (const auto& task : cfg.tasks) {
    if (task == "solve") {
      ensure_solved();
    } else if (task == "poincare") {
      PoincareEstimate sp = poincare_spectral(*fm);
      PoincareEstimate co = poincare_constructive(*cfg.measure, *cfg.domain);
      report["poincare"] = {{"lambda_min", sp.lambda_min},
                            {"spectral_constant", sp.spectral_constant},
                            {"constructive_constant", co.constructive_constant},
                            {"annulus", {co.annulus_r1, co.annulus_r2}},
                            {"chain_length", co.chain_length},
                            {"iterations", sp.iterations}};
      check(sp.spectral_constant <= co.constructive_constant * (1 + 1e-9), "poincare_ordering",
            fmt17(sp.spectral_constant) + " <= " + fmt17(co.constructive_constant));
    } else if (task == "barrier") {
      Barrier bar = build_barrier(*fm);
      report["barrier"] = {
          {"case", bar.support_case == Barrier::Case::UnboundedSupport ? "unbounded" : "compact"},
          {"c_sup", bar.c_sup},
          {"lower_lw", bar.lower_lw},
          {"certificate", bar.certificate},
          {"scale_constant", bar.scale_constant}};
      check(bar.certificate, "barrier_certificate", fmt17(bar.lower_lw));
    } else if (task == "bounds") {
      ensure_solved();
      LinfBound lb = linf_bound(*solved, *fm, fvals, gvals, cfg.eps_schedule, cfg.seed);
      json js;
      js["eps_schedule"] = lb.eps_schedule;
      js["c_eps_inverse"] = lb.c_eps_inverse;
      js["c_eff_inverse"] = lb.c_eff_inverse;
      js["bj_inf_kappa"] = lb.bj_inf_kappa;
      js["gap"] = lb.gap;
      js["bound"] = lb.bound;
      js["max_abs_solution"] = lb.max_abs_solution;
      js["asserted"] = lb.asserted;
      js["holds"] = lb.holds;
      report["bounds"] = js;
      if (lb.asserted) check(lb.holds, "linf_bound", fmt17(lb.max_abs_solution) + " <= " + fmt17(lb.bound));
      solved->linf = LinfRecord{lb.asserted ? 1.0 / lb.c_eff_inverse : 0.0, lb.bound,
                                lb.max_abs_solution, lb.asserted};
    } else if (task == "extend") {
      ReflectionMap map(cfg.domain);
      CutoffResult cut = build_cutoff(map, grid);
      LipschitzProbe lip = lipschitz_probe(map, 2000, cfg.seed);
      if (cfg.measure->kind() != LevyMeasure::Kind::Radial)
        throw SpecError("extension requires an isotropic density");
      ScalingCheck sc = kernel_scaling_check(cfg.measure->kernel(), lip.alpha_hat, 512, cfg.seed);
      GridFunction gd = GridFunction::sample_halo(grid, cfg.g.fn);
      ExtensionResult ext = extend(gd, map, cut, *fm, sc);
      report["extend"] = {{"tube_width", map.tube_width()},
                          {"alpha_hat", lip.alpha_hat},
                          {"scaling_constant", sc.c_alpha},
                          {"cutoff_linear_bound", cut.linear_bound},
                          {"input_norm", ext.input_norm},
                          {"output_norm", ext.output_norm},
                          {"ratio", ext.ratio},
                          {"blocks",
                           {{"exterior", ext.block_exterior},
                            {"a_prime", ext.block_a_prime},
                            {"a", ext.block_a},
                            {"b", ext.block_b},
                            {"a11", ext.a11},
                            {"a12", ext.a12},
                            {"a2", ext.a2},
                            {"b11", ext.b11},
                            {"b12", ext.b12},
                            {"b2", ext.b2}}}};
      check(std::isfinite(ext.ratio), "extension_ratio_finite", fmt17(ext.ratio));
    } else if (task == "mc") {
      JumpProcessSpec spec = JumpProcessSpec::from_measure(*cfg.measure, cfg.mc.delta);
      McEstimate est = feynman_kac(spec, *cfg.domain, cfg.mc.x0, cfg.f.fn, cfg.g.fn,
                                   cfg.mc.n_paths, cfg.seed, cfg.mc.path_cap);
      report["mc"] = {{"estimate", est.estimate},
                      {"std_error", est.std_error},
                      {"n_paths", est.n_paths},
                      {"seed", est.seed},
                      {"total_rate", spec.total_rate()},
                      {"mean_jumps", est.mean_jumps}};
    } else {
      throw ConfigError("unknown task: " + task);
    }
  }

  // expectations
  for (const auto& ex : cfg.expects) {
    if (ex.kind == "uniform_value") {
      ensure_solved();
      double worst = 0;
      for (std::size_t i = 0; i < grid->size(); ++i)
        if (grid->interior[i])
          worst = std::max(worst, std::abs(solved->solution.coeffs[i] - ex.value));
      check(worst <= ex.tol, "expect_uniform_value", fmt17(worst) + " <= " + fmt17(ex.tol));
    } else if (ex.kind == "value_at") {
      ensure_solved();
      double v = solved->solution.eval(ex.x);
      check(std::abs(v - ex.value) <= ex.tol, "expect_value_at", fmt17(v));
    } else if (ex.kind == "lambda_min") {
      double lm = report.contains("poincare") ? report["poincare"]["lambda_min"].get<double>()
                                              : poincare_spectral(*fm).lambda_min;
      check(std::abs(lm - ex.value) <= ex.tol, "expect_lambda_min", fmt17(lm));
    } else if (ex.kind == "mc_value") {
      if (!report.contains("mc")) throw ConfigError("mc_value expectation requires the mc task");
      double est = report["mc"]["estimate"].get<double>();
      double se = report["mc"]["std_error"].get<double>();
      double band = ex.nsigma > 0 ? ex.nsigma * se : 3 * se;
      check(std::abs(est - ex.value) <= band + ex.tol, "expect_mc_value",
            fmt17(est) + " vs " + fmt17(ex.value));
    } else if (ex.kind == "mc_matches_solution") {
      ensure_solved();
      if (!report.contains("mc")) throw ConfigError("mc_matches_solution requires the mc task");
      double est = report["mc"]["estimate"].get<double>();
      double se = report["mc"]["std_error"].get<double>();
      double uval = solved->solution.eval(ex.x);
      double band = (ex.nsigma > 0 ? ex.nsigma : 3) * se + ex.tol;
      check(std::abs(est - uval) <= band, "expect_mc_matches_solution",
            fmt17(est) + " vs " + fmt17(uval));
    } else if (ex.kind == "linf_holds") {
      if (!report.contains("bounds")) throw ConfigError("linf_holds requires the bounds task");
      check(report["bounds"]["holds"].get<bool>(), "expect_linf_holds");
    } else if (ex.kind == "max_principle") {
      ensure_solved();
      auto verdict = check_weak_max_principle(*solved, 1e-10);
      check(verdict.pass, "expect_max_principle", fmt17(verdict.min_value));
    } else if (ex.kind == "energy_value") {
      ensure_solved();
      check(std::abs(solved->energy - ex.value) <= ex.tol, "expect_energy_value",
            fmt17(solved->energy));
    } else {
      throw ConfigError("unknown expectation: " + ex.kind);
    }
  }

  std::ostringstream summary;
  for (const auto& [ok, name] : res.checks) summary << (ok ? "PASS " : "FAIL ") << name << "\n";
  res.summary_text = summary.str();
  res.report_json = report.dump(2) + "\n";

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    if (solved) write_solution_csv(out_dir + "/solution.csv", solved->solution);
    std::ofstream(out_dir + "/report.json") << res.report_json;
    std::ofstream(out_dir + "/summary.txt") << res.summary_text;
  }
  return res;
}

}  // namespace nld
