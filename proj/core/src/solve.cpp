#include "nld/solve.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "nld/errors.hpp"
#include "quad.hpp"

namespace nld {

namespace {

struct InteriorOp {
  const FormMatrix& fm;
  std::vector<std::size_t> idx;  // interior dofs in lattice order
  mutable Eigen::VectorXd full, out;

  explicit InteriorOp(const FormMatrix& f) : fm(f) {
    const Grid& g = *fm.grid;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.interior[i]) idx.push_back(i);
    full.setZero(g.size());
    out.setZero(g.size());
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    full.setZero();
    for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] = v[k];
    fm.apply(full, out);
    Eigen::VectorXd r(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[k] = out[idx[k]];
    return r;
  }
};

/// Plain conjugate gradients on the matrix-free interior operator.
struct CGResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double rel_residual = 0;
  std::vector<double> history;
};

CGResult conjugate_gradients(const InteriorOp& op, const Eigen::VectorXd& b,
                             const SolveOptions& opt) {
  const std::size_t n = op.idx.size();
  CGResult res;
  res.x = opt.initial_guess ? *opt.initial_guess : Eigen::VectorXd::Zero(n);
  double bnorm = b.norm();
  if (bnorm == 0) {
    res.x.setZero();
    return res;
  }
  double diag = op.fm.stiffness.coeff({0, 0});
  double pre = (opt.jacobi && diag > 0) ? 1.0 / diag : 1.0;

  Eigen::VectorXd r = b - op.apply(res.x);
  Eigen::VectorXd z = pre * r;
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (int it = 0; it < opt.max_iterations; ++it) {
    double rel = r.norm() / bnorm;
    res.rel_residual = rel;
    if (res.history.size() < 64) res.history.push_back(rel);
    if (rel <= opt.cg_tol) {
      res.iterations = it;
      return res;
    }
    Eigen::VectorXd Ap = op.apply(p);
    double pAp = p.dot(Ap);
    if (!(pAp > 0))
      throw SolverError("conjugate gradients hit a nonpositive curvature direction (form not SPD?)");
    double alpha = rz / pAp;
    res.x += alpha * p;
    r -= alpha * Ap;
    z = pre * r;
    double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  std::string hist;
  for (double h : res.history) hist += " " + std::to_string(h);
  throw SolverError("conjugate gradients did not converge; residual history:" + hist);
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

GridFunction random_test_function(const FormMatrix& fm, const std::vector<uint8_t>& support,
                                  uint64_t seed) {
  GridFunction phi = GridFunction::zero(fm.grid);
  uint64_t state = seed;
  for (std::size_t i = 0; i < fm.grid->size(); ++i) {
    state = splitmix64(state);
    if (support[i]) phi.coeffs[i] = 2.0 * (double(state >> 11) * 0x1.0p-53) - 1.0;
  }
  return phi;
}

}  // namespace

SolveReport solve(const FormMatrix& fm, const GridFunction& f, const GridFunction& g,
                  const SolveOptions& opt) {
  const Grid& grid = *fm.grid;
  auto t0 = std::chrono::steady_clock::now();

  GridFunction fin = GridFunction::zero(fm.grid);
  GridFunction ghalo = GridFunction::zero(fm.grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.interior[i]) fin.coeffs[i] = f.coeffs[i];
    else ghalo.coeffs[i] = g.coeffs[i];
  }
  if (!fin.coeffs.allFinite() || !ghalo.coeffs.allFinite())
    throw SpecError("solve requires finite interior data and finite exterior trace");

  InteriorOp op(fm);
  Eigen::VectorXd mf(grid.size()), sg(grid.size());
  fm.mass_apply(fin.coeffs, mf);
  fm.apply(ghalo.coeffs, sg);
  Eigen::VectorXd b(op.idx.size());
  for (std::size_t k = 0; k < op.idx.size(); ++k) b[k] = mf[op.idx[k]] - sg[op.idx[k]];
  if (!b.allFinite())
    throw SpecError("infinite coupling energy: the exterior data does not have a finite trace");

  CGResult cg = conjugate_gradients(op, b, opt);

  SolveReport rep;
  rep.solution = ghalo;
  for (std::size_t k = 0; k < op.idx.size(); ++k) rep.solution.coeffs[op.idx[k]] = cg.x[k];
  rep.residual_norm = cg.rel_residual;
  rep.iterations = cg.iterations;
  rep.energy = fm.energy(rep.solution, fin);
  auto t1 = std::chrono::steady_clock::now();
  rep.timings_ms["solve"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return rep;
}

double verify_weak_identity(const SolveReport& rep, const FormMatrix& fm, const GridFunction& f,
                            int trials, uint64_t seed) {
  GridFunction fin = GridFunction::zero(fm.grid);
  for (std::size_t i = 0; i < fm.grid->size(); ++i)
    if (fm.grid->interior[i]) fin.coeffs[i] = f.coeffs[i];
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    GridFunction phi = random_test_function(fm, fm.grid->interior, splitmix64(seed + t));
    double lhs = fm.bilinear(rep.solution, phi);
    double rhs = fm.mass_bilinear(fin, phi);
    double nphi = grid_norm(fm, phi, NormSpace::VOmega);
    if (nphi > 0) worst = std::max(worst, std::abs(lhs - rhs) / nphi);
  }
  return worst;
}

double restriction_check(const SolveReport& rep, const FormMatrix& fm, const GridFunction& f,
                         const Domain& omega_prime, int trials, uint64_t seed) {
  const Grid& g = *fm.grid;
  std::vector<uint8_t> sub(g.size(), 0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sub[i] = g.interior[i] && omega_prime.contains(g.coord(i));
    n += sub[i];
  }
  if (n == 0) throw SpecError("restriction subdomain contains no dofs");
  GridFunction fin = GridFunction::zero(fm.grid);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.interior[i]) fin.coeffs[i] = f.coeffs[i];
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    GridFunction phi = random_test_function(fm, sub, splitmix64(seed + 0x517cc1b7ULL + t));
    double lhs = fm.bilinear(rep.solution, phi);
    double rhs = fm.mass_bilinear(fin, phi);
    double nphi = grid_norm(fm, phi, NormSpace::VOmega);
    if (nphi > 0) worst = std::max(worst, std::abs(lhs - rhs) / nphi);
  }
  return worst;
}

PointwiseValue pointwise_apply(const LevyMeasure& nu, const std::function<double(Point)>& u,
                               const Point& x, double u_support_radius, double tol) {
  PointwiseValue out;
  double far_cut = norm2(x) + u_support_radius + 1.0;

  nu.for_each_component([&](const LevyMeasure& comp) {
    if (comp.kind() == LevyMeasure::Kind::Atomic) {
      for (const auto& p : comp.atom_pairs())
        out.value += p.weight * (2 * u(x) - u(x + p.y) - u(x - p.y));
      const FarTail& ft = comp.far_tail();
      if (ft.mass > 0) {
        if (ft.radius >= far_cut - 1.0) {
          out.value += ft.mass * u(x);  // far atoms fall outside supp(u)
        } else {
          out.value += ft.mass * u(x);
          out.error += 2 * ft.mass * std::abs(u(x));  // placement unknown
        }
      }
      return;
    }
    const RadialKernel& K = comp.kernel();
    if (comp.dim() == 1) {
      auto integrand = [&](double y) {
        return (2 * u(x) - u(pt(x[0] + y)) - u(pt(x[0] - y))) * K.density(y);
      };
      double inner = std::min(0.5, far_cut / 4);
      auto near = quad::improper_at_zero(integrand, inner, tol, 1e-15);
      std::vector<double> brk = {1.0, std::abs(u_support_radius - x[0]),
                                 std::abs(u_support_radius + x[0])};
      auto mid = quad::integrate_pts(integrand, inner, far_cut, brk, tol, 1e-15);
      double tail = u(x) * K.mass_above(far_cut);
      out.value += near.value + mid.value + tail;
      out.error += near.error + mid.error;
    } else {
      auto ring = [&](double t) {
        const int panels = 64;
        double acc = 0;
        for (int p = 0; p < panels; ++p) {
          double th = 2 * M_PI * (p + 0.5) / panels;
          Point e{t * std::cos(th), t * std::sin(th)};
          acc += 2 * u(x) - u(x + e) - u(x - e);
        }
        return acc / panels;  // angular average
      };
      auto integrand = [&](double t) { return M_PI * t * K.density(t) * ring(t); };
      double inner = std::min(0.5, far_cut / 4);
      auto near = quad::improper_at_zero(integrand, inner, std::max(tol, 1e-8), 1e-14);
      auto mid = quad::integrate(integrand, inner, far_cut, std::max(tol, 1e-8), 1e-14);
      double tail = u(x) * K.mass_above(far_cut);
      out.value += near.value + mid.value + tail;
      out.error += near.error + mid.error + 1e-6 * std::abs(out.value);
    }
  });
  return out;
}

ConsistencyReport strong_consistency_check(std::shared_ptr<const LevyMeasure> nu,
                                           std::shared_ptr<const Domain> domain,
                                           const std::function<double(Point)>& u,
                                           double u_support_radius,
                                           const std::vector<double>& hs, double r_trunc,
                                           Basis basis, int trials, uint64_t seed) {
  ConsistencyReport rep;
  bool has_atomic = false;
  nu->for_each_component([&](const LevyMeasure& c) {
    if (c.kind() == LevyMeasure::Kind::Atomic) has_atomic = true;
  });
  if (has_atomic) {
    rep.skipped = true;
    rep.notice = "pointwise consistency requires a radial kernel; atomic component present";
    return rep;
  }
  for (double h : hs) {
    auto grid = std::make_shared<Grid>(make_grid(domain, h, r_trunc, basis, nu.get()));
    FormMatrix fm = assemble(nu, grid);
    GridFunction uu = GridFunction::sample(grid, u);
    // the lattice represents u clipped to its box; apply L to the same object
    double lo = grid->origin[0], hi = grid->origin[0] + grid->shape[0] * grid->h;
    double lo1 = grid->origin[1], hi1 = grid->origin[1] + grid->shape[1] * grid->h;
    auto u_clip = [&](Point p) -> double {
      if (p[0] < lo || p[0] > hi) return 0.0;
      if (grid->dim == 2 && (p[1] < lo1 || p[1] > hi1)) return 0.0;
      return u(p);
    };
    double reach0 = std::max(std::abs(lo), std::abs(hi));
    double reach1 = grid->dim == 2 ? std::max(std::abs(lo1), std::abs(hi1)) : 0.0;
    double support = std::min(u_support_radius, std::hypot(reach0, reach1));
    GridFunction f = GridFunction::zero(grid);
    for (std::size_t i = 0; i < grid->size(); ++i)
      if (grid->interior[i])
        f.coeffs[i] = pointwise_apply(*nu, u_clip, grid->coord(i), support).value;
    double worst = 0;
    for (int t = 0; t < trials; ++t) {
      GridFunction phi = random_test_function(fm, grid->interior, splitmix64(seed + t));
      double lhs = fm.bilinear(uu, phi);
      double rhs = fm.mass_bilinear(f, phi);
      double nphi = grid_norm(fm, phi, NormSpace::VOmega);
      if (nphi > 0) worst = std::max(worst, std::abs(lhs - rhs) / nphi);
    }
    rep.h.push_back(h);
    rep.residual.push_back(worst);
  }
  if (rep.residual.size() >= 2) {
    std::size_t n = rep.residual.size();
    double num = rep.residual[n - 2], den = rep.residual[n - 1];
    if (den > 0 && num > 0 && rep.h[n - 2] != rep.h[n - 1])
      rep.rate = std::log(num / den) / std::log(rep.h[n - 2] / rep.h[n - 1]);
  }
  return rep;
}

}  // namespace nld
