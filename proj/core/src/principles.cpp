#include "nld/principles.hpp"

#include <algorithm>
#include <cmath>

#include "nld/errors.hpp"

namespace nld {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(uint64_t& state) {
  state = splitmix64(state);
  return double(state >> 11) * 0x1.0p-53;
}

struct InteriorOp {
  const FormMatrix& fm;
  std::vector<std::size_t> idx;
  mutable Eigen::VectorXd full, out;

  explicit InteriorOp(const FormMatrix& f) : fm(f) {
    const Grid& g = *fm.grid;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.interior[i]) idx.push_back(i);
    full.setZero(g.size());
    out.setZero(g.size());
  }
  Eigen::VectorXd applyK(const Eigen::VectorXd& v) const {
    full.setZero();
    for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] = v[k];
    fm.apply(full, out);
    Eigen::VectorXd r(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[k] = out[idx[k]];
    return r;
  }
  Eigen::VectorXd applyM(const Eigen::VectorXd& v) const {
    full.setZero();
    for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] = v[k];
    fm.mass_apply(full, out);
    Eigen::VectorXd r(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[k] = out[idx[k]];
    return r;
  }
  Eigen::VectorXd solveK(const Eigen::VectorXd& b, double tol) const {
    // inner conjugate gradients
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    Eigen::VectorXd r = b;
    Eigen::VectorXd p = r;
    double rr = r.squaredNorm();
    double b2 = std::sqrt(rr);
    if (b2 == 0) return x;
    for (int it = 0; it < 100000; ++it) {
      if (std::sqrt(rr) <= tol * b2) return x;
      Eigen::VectorXd Ap = applyK(p);
      double pAp = p.dot(Ap);
      if (!(pAp > 0)) throw SolverError("interior block is not positive definite");
      double alpha = rr / pAp;
      x += alpha * p;
      r -= alpha * Ap;
      double rr_new = r.squaredNorm();
      p = r + (rr_new / rr) * p;
      rr = rr_new;
    }
    throw SolverError("inner conjugate gradients stalled in inverse iteration");
  }
};

double chain_constant(int n) {
  // (2, 1) -> C_k = C_{k-1} + 4 c_{k-1}, c_k = 2 c_{k-1}; final bound 2 + 2 C_n = 2^{n+2} - 2
  if (n > 48) throw SpecError("translate chain too long for a useful constant");
  return std::ldexp(1.0, n + 2) - 2.0;
}

}  // namespace

PoincareEstimate poincare_spectral(const FormMatrix& fm, double tol, int max_iter) {
  InteriorOp op(fm);
  const std::size_t n = op.idx.size();
  if (n == 0) throw SpecError("no interior dofs");

  // deterministic start: ones plus a seeded perturbation to avoid orthogonal starts
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  uint64_t state = 0x5eedULL;
  for (std::size_t i = 0; i < n; ++i) v[i] += 0.01 * (uniform01(state) - 0.5);

  double lambda = 0, lambda_prev = -1;
  int it = 0;
  for (; it < max_iter; ++it) {
    Eigen::VectorXd mv = op.applyM(v);
    Eigen::VectorXd w = op.solveK(mv, 1e-13);
    double wMw = w.dot(op.applyM(w));
    if (!(wMw > 0)) throw SolverError("inverse iteration produced a null vector");
    w /= std::sqrt(wMw);
    lambda = w.dot(op.applyK(w)) / w.dot(op.applyM(w));
    v = w;
    if (it > 0 && std::abs(lambda - lambda_prev) <= tol * std::abs(lambda)) break;
    lambda_prev = lambda;
  }
  if (!(lambda > 0)) throw SolverError("interior block singular to tolerance (Rayleigh limit <= 0)");
  PoincareEstimate est;
  est.lambda_min = lambda;
  est.spectral_constant = 1.0 / lambda;
  est.iterations = it + 1;
  return est;
}

PoincareEstimate poincare_constructive(const LevyMeasure& nu, const Domain& omega) {
  // dyadic annulus search outward from [1/2, 1)
  const std::vector<int> order = [] {
    std::vector<int> o;
    for (int k = 0; k < 30; ++k) {
      o.push_back(-1 - k);
      o.push_back(k);
    }
    return o;
  }();
  // interleave to probe near-unit scales first
  std::vector<int> probe = {-1, 0, -2, 1, -3, 2, -4, 3};
  for (int j : order)
    if (std::find(probe.begin(), probe.end(), j) == probe.end()) probe.push_back(j);

  for (int j : probe) {
    double r1 = std::ldexp(1.0, j);
    double r2 = std::ldexp(1.0, j + 1);
    TailMass mass = nu.tail_mass(Region::annulus(r1, r2));
    if (mass.value <= 1e-14) continue;

    int n_chain = 0;
    if (nu.kind() == LevyMeasure::Kind::Atomic ||
        (nu.kind() == LevyMeasure::Kind::Mixture && [&] {
          bool all_atomic = true;
          nu.for_each_component([&](const LevyMeasure& c) {
            all_atomic = all_atomic && c.kind() == LevyMeasure::Kind::Atomic;
          });
          return all_atomic;
        }())) {
      // exact: only atoms inside the annulus carry mass
      nu.for_each_component([&](const LevyMeasure& c) {
        for (const auto& p : c.atom_pairs()) {
          double r = norm2(p.y);
          if (r1 <= r && r <= r2) n_chain = std::max(n_chain, omega.translate_chain_length(p.y));
        }
      });
      if (n_chain == 0) continue;  // only far-tail pseudo-mass in this annulus
    } else {
      // densities: the chain for any shift with |y| >= r1 empties within the
      // certified cap, which is therefore uniform over the annulus
      n_chain = int(std::ceil(omega.diameter() / r1)) + 1;
    }

    PoincareEstimate est;
    est.annulus_r1 = r1;
    est.annulus_r2 = r2;
    est.chain_length = n_chain;
    est.constructive_constant = chain_constant(n_chain) / mass.value;
    return est;
  }
  throw SpecError("no dyadic annulus with positive mass found (not a usable Levy measure)");
}

MaxPrincipleVerdict check_weak_max_principle(const SolveReport& rep, double tol) {
  MaxPrincipleVerdict v;
  const Grid& g = *rep.solution.grid;
  v.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (rep.solution.coeffs[i] < v.min_value) {
      v.min_value = rep.solution.coeffs[i];
      v.location = g.coord(i);
    }
  }
  v.pass = v.min_value >= -tol;
  return v;
}

MaxPrincipleVerdict check_comparison(const SolveReport& u, const SolveReport& v, double tol) {
  MaxPrincipleVerdict out;
  const Grid& g = *u.solution.grid;
  out.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double d = u.solution.coeffs[i] - v.solution.coeffs[i];
    if (d < out.min_value) {
      out.min_value = d;
      out.location = g.coord(i);
    }
  }
  out.pass = out.min_value >= -tol;
  return out;
}

MMatrixReport check_m_matrix(const FormMatrix& fm, double tol) {
  MMatrixReport rep;
  double diag = fm.stiffness.coeff({0, 0});
  rep.diagonal_nonnegative = diag >= -tol;
  rep.max_offdiagonal = 0;
  for (const auto& e : fm.stiffness.entries()) {
    if (e.lag[0] == 0 && e.lag[1] == 0) continue;
    rep.max_offdiagonal = std::max(rep.max_offdiagonal, e.value);
  }
  rep.offdiagonal_nonpositive = rep.max_offdiagonal <= tol * std::max(diag, 1.0);

  const Grid& g = *fm.grid;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.size()), out;
  fm.apply(ones, out);
  rep.min_row_sum = out.minCoeff();
  rep.row_sums_nonnegative = rep.min_row_sum >= -tol * std::max(diag, 1.0);
  return rep;
}

namespace {

/// C^2 polynomial step: 1 at s<=0 descending to 0 at s>=1.
double smoothstep_down(double s) {
  if (s <= 0) return 1;
  if (s >= 1) return 0;
  double t = 1 - s;
  return t * t * t * (10 - 15 * t + 6 * t * t);
}

}  // namespace

Barrier build_barrier(const FormMatrix& fm) {
  const Grid& g = *fm.grid;
  const LevyMeasure& nu = *fm.measure;
  const Domain& omega = *g.domain;
  double r2 = omega.max_distance_from({0, 0});
  double R = r2 + 1.0;

  Barrier bar;
  TailMass far = nu.tail_mass(Region::ball_complement({0, 0}, 2 * R));
  if (far.value > 1e-12) {
    // mass far out: mollified indicator eta = 1 on B_{R-1} covering Omega,
    // supported in B_R, scaled by nu(B_{2R}^c)
    bar.support_case = Barrier::Case::UnboundedSupport;
    bar.scale_constant = far.value;
    double C = far.value;
    bar.w = GridFunction::sample(fm.grid, [&](Point x) {
      double s = norm2(x) - (R - 1.0);
      return smoothstep_down(s) / C;
    });
    bar.c_sup = 1.0 / C;
  } else {
    double r1 = nu.support_radius();
    if (!std::isfinite(r1) || r1 <= 0)
      throw SpecError("barrier construction failed: no far mass and no compact support radius");
    double Rc = r1 + r2 + 1.0;
    double eps = r1 / 2;
    TailMass shell = nu.tail_mass(Region::annulus(eps, r1));
    int guard = 0;
    while (shell.value <= 1e-14 && guard++ < 50) {
      eps /= 2;
      shell = nu.tail_mass(Region::annulus(eps, r1));
    }
    if (shell.value <= 1e-14)
      throw SpecError("barrier construction failed: no measure mass below the support radius");
    double concavity_gap = eps * eps / (Rc * Rc);  // inf over |y|>eps of |y|^2/Rc^2
    double scale = concavity_gap * shell.value;
    bar.support_case = Barrier::Case::CompactSupport;
    bar.scale_constant = shell.value;
    bar.w = GridFunction::sample(fm.grid, [&](Point x) {
      double q = 1.0 - dot(x, x) / (Rc * Rc);
      return std::max(q, 0.0) / scale;
    });
    bar.c_sup = 1.0 / scale;
  }

  // discrete certificate: (K w)_i >= (M 1)_i on every interior row
  Eigen::VectorXd kw, m1;
  fm.apply(bar.w.coeffs, kw);
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.size());
  fm.mass_apply(ones, m1);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.interior[i]) lo = std::min(lo, kw[i] / m1[i]);
  bar.lower_lw = lo;
  bar.certificate = lo >= 1.0 - 1e-9;
  return bar;
}

namespace {

/// Points of Omega at distance d inward from the boundary (the dilation
/// infimum is attained in this layer when a jump lands just inside Omega_eps).
std::vector<Point> boundary_layer_probes(const Domain& omega, double d) {
  std::vector<Point> ps;
  switch (omega.kind()) {
    case Domain::Kind::Interval:
      ps.push_back(pt(omega.a() + d));
      ps.push_back(pt(omega.b() - d));
      break;
    case Domain::Kind::Box: {
      Point lo = omega.box_lo(), hi = omega.box_hi();
      for (int k = 0; k < 16; ++k) {
        double t = (k + 0.5) / 16.0;
        ps.push_back({lo[0] + d, lo[1] + t * (hi[1] - lo[1])});
        ps.push_back({hi[0] - d, lo[1] + t * (hi[1] - lo[1])});
        ps.push_back({lo[0] + t * (hi[0] - lo[0]), lo[1] + d});
        ps.push_back({lo[0] + t * (hi[0] - lo[0]), hi[1] - d});
      }
      break;
    }
    case Domain::Kind::Disk: {
      double r = omega.radius() - d;
      if (r <= 0) break;
      for (int k = 0; k < 16; ++k) {
        double th = 2 * M_PI * k / 16.0;
        ps.push_back(omega.center() + Point{r * std::cos(th), r * std::sin(th)});
      }
      break;
    }
    case Domain::Kind::PolarGraph: {
      for (int k = 0; k < 16; ++k) {
        double th = 2 * M_PI * k / 16.0;
        Point b = omega.graph().boundary_point(th);
        double n = norm2(b);
        if (n > d) ps.push_back(((n - d) / n) * b);
      }
      break;
    }
  }
  std::vector<Point> inside;
  for (const Point& p : ps)
    if (omega.contains(p)) inside.push_back(p);
  return inside;
}

double inf_exterior_mass(const LevyMeasure& nu, const Domain& omega, const Domain& dilated,
                         const std::vector<Point>& samples) {
  double inf = std::numeric_limits<double>::infinity();
  for (const Point& x : samples)
    inf = std::min(inf, nu.tail_mass(Region::complement_shifted(dilated, x)).value);
  return inf;
}

}  // namespace

LinfBound linf_bound(const SolveReport& rep, const FormMatrix& fm, const GridFunction& f,
                     const GridFunction& g, const std::vector<double>& eps_schedule,
                     uint64_t seed, int n_random, double tol) {
  const Grid& grid = *fm.grid;
  const Domain& omega = *grid.domain;
  const LevyMeasure& nu = *fm.measure;

  // base samples: interior grid coordinates plus seeded uniform draws
  std::vector<Point> base;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.interior[i]) base.push_back(grid.coord(i));
  BoundingBox bb = omega.bounding_box();
  uint64_t state = seed;
  int drawn = 0, guard = 0;
  while (drawn < n_random && guard++ < 100 * n_random) {
    Point p{bb.lo[0] + uniform01(state) * (bb.hi[0] - bb.lo[0]),
            grid.dim == 2 ? bb.lo[1] + uniform01(state) * (bb.hi[1] - bb.lo[1]) : 0.0};
    if (omega.contains(p)) {
      base.push_back(p);
      ++drawn;
    }
  }

  LinfBound out;
  out.bj_inf_kappa = inf_exterior_mass(nu, omega, omega, base);

  double running = 0;  // the infima grow as eps shrinks; enforce monotonicity
  for (double eps : eps_schedule) {
    Domain dil = omega.dilate(eps);
    std::vector<Point> samples = base;
    for (double frac : {0.25, 0.5, 0.75}) {
      auto probes = boundary_layer_probes(omega, frac * eps);
      samples.insert(samples.end(), probes.begin(), probes.end());
    }
    double inf = inf_exterior_mass(nu, omega, dil, samples);
    running = std::max(running, inf);
    out.eps_schedule.push_back(eps);
    out.c_eps_inverse.push_back(inf);
  }
  out.c_eff_inverse = running;
  out.gap = out.bj_inf_kappa - out.c_eff_inverse;

  double fmax = 0, gmax = 0, umax = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.interior[i]) fmax = std::max(fmax, std::abs(f.coeffs[i]));
    else gmax = std::max(gmax, std::abs(g.coeffs[i]));
    umax = std::max(umax, std::abs(rep.solution.coeffs[i]));
  }
  out.max_abs_solution = umax;
  if (out.c_eff_inverse > 1e-14) {
    out.bound = fmax / out.c_eff_inverse + gmax;
    out.asserted = true;
    out.holds = umax <= out.bound + tol;
  }
  return out;
}

}  // namespace nld
