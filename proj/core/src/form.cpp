#include "nld/form.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>

#include "nld/errors.hpp"
#include "parallel.hpp"
#include "quad.hpp"

namespace nld {

// ---------------------------------------------------------------------------
// basis autocorrelations

double autocorr_1d(Basis basis, double h, double t) {
  double s = std::abs(t) / h;
  if (basis == Basis::P0) {
    return s >= 1 ? 0.0 : h * (1.0 - s);
  }
  if (s >= 2) return 0;
  if (s <= 1) return h * (2.0 / 3.0 - s * s + 0.5 * s * s * s);
  double q = 2.0 - s;
  return h * q * q * q / 6.0;
}

double autocorr_1d_dd(Basis basis, double h, double t) {
  if (basis == Basis::P0) throw SpecError("autocorrelation of P0 is not twice differentiable");
  double s = std::abs(t) / h;
  if (s >= 2) return 0;
  if (s <= 1) return (-2.0 + 3.0 * s) / h;
  return (2.0 - s) / h;
}

double autocorr(const Grid& g, const Point& v) {
  double a = autocorr_1d(g.basis, g.h, v[0]);
  if (g.dim == 2) a *= autocorr_1d(g.basis, g.h, v[1]);
  return a;
}

// ---------------------------------------------------------------------------
// Stencil

namespace {
constexpr int64_t kOff = 1 << 20;
int64_t pack(std::array<int, 2> m) { return (m[0] + kOff) + ((m[1] + kOff) << 21); }
std::array<int, 2> unpack(int64_t k) {
  return {int(k & ((1 << 21) - 1)) - int(kOff), int(k >> 21) - int(kOff)};
}
}  // namespace

void Stencil::add(std::array<int, 2> lag, double v) {
  if (v == 0) return;
  raw_.emplace_back(pack(lag), v);
  dirty_ = true;
}

void Stencil::add_symmetric(std::array<int, 2> lag, double v) {
  add(lag, v);
  if (lag[0] != 0 || lag[1] != 0) add({-lag[0], -lag[1]}, v);
}

const std::vector<Stencil::Entry>& Stencil::entries() const {
  if (dirty_ || (entries_.empty() && !raw_.empty())) {
    auto raw = raw_;
    std::sort(raw.begin(), raw.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    entries_.clear();
    for (const auto& [k, v] : raw) {
      if (!entries_.empty() && pack(entries_.back().lag) == k) entries_.back().value += v;
      else entries_.push_back({unpack(k), v});
    }
    dirty_ = false;
  }
  return entries_;
}

double Stencil::coeff(std::array<int, 2> lag) const {
  int64_t key = pack(lag);
  const auto& es = entries();
  auto it = std::lower_bound(es.begin(), es.end(), key,
                             [](const Entry& e, int64_t k) { return pack(e.lag) < k; });
  return (it != es.end() && pack(it->lag) == key) ? it->value : 0.0;
}

void Stencil::apply(const Grid& g, const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  out.setZero(u.size());
  const int s0 = g.shape[0], s1 = g.shape[1];
  for (const auto& e : entries()) {
    const int m0 = e.lag[0], m1 = e.lag[1];
    const double c = e.value;
    const int i1lo = std::max(0, -m1), i1hi = s1 - std::max(0, m1);
    const int i0lo = std::max(0, -m0), i0hi = s0 - std::max(0, m0);
    if (i0hi <= i0lo) continue;
    for (int i1 = i1lo; i1 < i1hi; ++i1) {
      const double* src = u.data() + std::size_t(i1 + m1) * s0 + (i0lo + m0);
      double* dst = out.data() + std::size_t(i1) * s0 + i0lo;
      const int n = i0hi - i0lo;
      for (int k = 0; k < n; ++k) dst[k] += c * src[k];
    }
  }
}

double Stencil::bilinear(const Grid& g, const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  const int s0 = g.shape[0], s1 = g.shape[1];
  double total = 0;
  for (const auto& e : entries()) {
    const int m0 = e.lag[0], m1 = e.lag[1];
    const int i1lo = std::max(0, -m1), i1hi = s1 - std::max(0, m1);
    const int i0lo = std::max(0, -m0), i0hi = s0 - std::max(0, m0);
    if (i0hi <= i0lo) continue;
    double acc = 0;
    for (int i1 = i1lo; i1 < i1hi; ++i1) {
      const double* a = u.data() + std::size_t(i1) * s0 + i0lo;
      const double* b = v.data() + std::size_t(i1 + m1) * s0 + (i0lo + m0);
      const int n = i0hi - i0lo;
      for (int k = 0; k < n; ++k) acc += a[k] * b[k];
    }
    total += e.value * acc;
  }
  return total;
}

double Stencil::quadratic(const Grid& g, const Eigen::VectorXd& u) const {
  return bilinear(g, u, u);
}

// ---------------------------------------------------------------------------
// assembly

namespace {

/// Support box of all dofs: P0 cells tile [origin, origin + shape*h]; P1 hats
/// reach one spacing beyond the end nodes.
void support_box(const Grid& g, Point& lo, Point& hi) {
  double pad = g.basis == Basis::P0 ? 0.0 : g.h;
  for (int k = 0; k < g.dim; ++k) {
    lo[k] = g.origin[k] - (g.basis == Basis::P0 ? 0.0 : pad);
    double n = g.basis == Basis::P0 ? g.shape[k] : (g.shape[k] - 1);
    hi[k] = g.origin[k] + n * g.h + (g.basis == Basis::P0 ? 0.0 : pad);
  }
}

struct LagValue {
  std::array<int, 2> lag;
  double value;
  double error;
};

/// Pair weights of an atomic component at lattice lags near +-y.
void atomic_pair_weights(const Grid& g, const AtomPair& p, std::vector<LagValue>& out) {
  int s = g.stencil_halfwidth();
  for (int sign : {+1, -1}) {
    Point y = sign > 0 ? p.y : -p.y;
    int lo[2] = {0, 0}, hi[2] = {0, 0};
    bool any = true;
    for (int k = 0; k < g.dim; ++k) {
      lo[k] = int(std::ceil(y[k] / g.h - s + 1e-12));
      hi[k] = int(std::floor(y[k] / g.h + s - 1e-12));
      lo[k] = std::max(lo[k], -(g.shape[k] - 1));
      hi[k] = std::min(hi[k], g.shape[k] - 1);
      if (lo[k] > hi[k]) any = false;
    }
    if (!any) continue;
    for (int m1 = (g.dim == 2 ? lo[1] : 0); m1 <= (g.dim == 2 ? hi[1] : 0); ++m1) {
      for (int m0 = lo[0]; m0 <= hi[0]; ++m0) {
        Point d{m0 * g.h - y[0], g.dim == 2 ? m1 * g.h - y[1] : 0.0};
        double a = autocorr(g, d);
        if (a != 0) out.push_back({{m0, m1}, p.weight * a, 0.0});
      }
    }
  }
}

/// 1-D radial pair weight PW(m) = ∫_{eps<=|y|<=E} a(mh - y) V(|y|) dy for m >= 0.
LagValue radial_pw_1d(const RadialKernel& K, const Grid& g, int m, double eps, double E) {
  const double h = g.h;
  const int s = g.stencil_halfwidth();
  double c = m * h;
  double lo = c - s * h, hi = c + s * h;
  auto f = [&](double y) {
    double ay = std::abs(y);
    if (ay < eps || ay > E) return 0.0;
    return autocorr_1d(g.basis, h, c - y) * K.density(ay);
  };
  std::vector<double> brk;
  for (int j = -s; j <= s; ++j) brk.push_back(c + j * h);
  for (double b : {eps, -eps, E, -E, 1.0, -1.0, K.support_radius(), -K.support_radius(),
                   K.inner_cut(), -K.inner_cut()}) {
    if (std::isfinite(b)) brk.push_back(b);
  }
  auto r = quad::integrate_pts(f, lo, hi, brk, 1e-11, 1e-16);
  return {{m, 0}, r.value, r.error};
}

/// Sub-eps_pv exact pair weight (admissible bases only): the overlap factor
/// vanishes at the origin fast enough to make the integral absolutely
/// convergent.
LagValue radial_pw_small_1d(const RadialKernel& K, const Grid& g, int m, double eps) {
  const double h = g.h;
  double c = m * h;
  auto f = [&](double y) {
    return (autocorr_1d(g.basis, h, c - y) + autocorr_1d(g.basis, h, c + y)) * K.density(y);
  };
  auto r = quad::improper_at_zero(f, eps, 1e-10, 1e-16);
  return {{m, 0}, r.value, r.error};
}

/// Stiffness contribution of the jumps below eps_pv at lag m: the symmetrized
/// second difference of the autocorrelation decays at the origin (linearly for
/// P0 kinks, quadratically inside smooth pieces), so the singular integral
/// converges absolutely and no Taylor surrogate is needed.
LagValue radial_small_stiffness_1d(const RadialKernel& K, const Grid& g, int m, double eps) {
  const double h = g.h;
  double c = m * h;
  double a0 = 2 * autocorr_1d(g.basis, h, c);
  auto f = [&](double y) {
    return (a0 - autocorr_1d(g.basis, h, c - y) - autocorr_1d(g.basis, h, c + y)) * K.density(y);
  };
  auto r = quad::improper_at_zero(f, eps, 1e-10, 1e-16);
  return {{m, 0}, r.value, r.error};
}

LagValue radial_small_stiffness_2d(const RadialKernel& K, const Grid& g, int m0, int m1,
                                   double eps) {
  const double h = g.h;
  const Point c{m0 * h, m1 * h};
  auto A2 = [&](double y0, double y1) {
    return autocorr_1d(g.basis, h, y0) * autocorr_1d(g.basis, h, y1);
  };
  double a0 = 2 * A2(c[0], c[1]);
  auto ring = [&](double t) {
    const int panels = 64;
    static const double g3x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double g3w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double dt = 2 * M_PI / panels;
    double acc = 0;
    for (int p = 0; p < panels; ++p) {
      for (int q = 0; q < 3; ++q) {
        double th = p * dt + (g3x[q] + 1) * dt / 2;
        double e0 = t * std::cos(th), e1 = t * std::sin(th);
        acc += g3w[q] * (a0 - A2(c[0] - e0, c[1] - e1) - A2(c[0] + e0, c[1] + e1));
      }
    }
    return acc * dt / 2;
  };
  auto f = [&](double t) { return 0.5 * t * K.density(t) * ring(t); };
  auto r = quad::improper_at_zero(f, eps, 1e-8, 1e-15);
  return {{m0, m1}, r.value, r.error + 1e-7 * std::abs(r.value)};
}

/// 2-D pair weight for the lag class (m0, m1), m0 >= m1 >= 0, over the annulus
/// {eps <= |y| <= E}. The support box of A(. - mh) never straddles E (the
/// truncation radius carries a cushion), so only the inner cutoff matters.
LagValue radial_pw_2d(const RadialKernel& K, const Grid& g, int m0, int m1, double eps,
                      double E) {
  const double h = g.h;
  const int s = g.stencil_halfwidth();
  const Point c{m0 * h, m1 * h};
  const double bx0 = c[0] - s * h, bx1 = c[0] + s * h;
  const double by0 = c[1] - s * h, by1 = c[1] + s * h;
  double dmin = std::hypot(std::max(0.0, bx0), std::max(0.0, by0));
  double dmax = std::hypot(std::max(std::abs(bx0), std::abs(bx1)),
                           std::max(std::abs(by0), std::abs(by1)));
  if (dmin > E || dmax <= eps) return {{m0, m1}, 0.0, 0.0};

  auto A2 = [&](double y0, double y1) {
    return autocorr_1d(g.basis, h, y0 - c[0]) * autocorr_1d(g.basis, h, y1 - c[1]);
  };

  bool near_origin = dmin < eps + 4 * h || !std::isfinite(K.density(std::max(dmin, eps)));
  // boxes crossing a hard support edge of the kernel also take the polar route
  double sr = K.support_radius();
  if (std::isfinite(sr) && dmin < sr && dmax > sr) near_origin = true;
  double ic = K.inner_cut();
  if (ic > 0 && dmin < ic && dmax > ic) near_origin = true;

  if (!near_origin) {
    // V smooth over the support box: tensor Gauss-Legendre per polynomial cell
    static const double gl_x[8] = {-0.9602898564975363, -0.7966664774136267,
                                   -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,
                                   0.7966664774136267,  0.9602898564975363};
    static const double gl_w[8] = {0.1012285362903763, 0.2223810344533745,
                                   0.3137066458778873, 0.3626837833783620,
                                   0.3626837833783620, 0.3137066458778873,
                                   0.2223810344533745, 0.1012285362903763};
    double total = 0;
    for (int cell0 = -s; cell0 < s; ++cell0) {
      for (int cell1 = -s; cell1 < s; ++cell1) {
        double x0 = c[0] + cell0 * h, y0 = c[1] + cell1 * h;
        double acc = 0;
        for (int a = 0; a < 8; ++a) {
          double px = x0 + (gl_x[a] + 1) * h / 2;
          for (int b = 0; b < 8; ++b) {
            double py = y0 + (gl_x[b] + 1) * h / 2;
            double t = std::hypot(px, py);
            if (t < eps || t > E) continue;
            acc += gl_w[a] * gl_w[b] * A2(px, py) * K.density(t);
          }
        }
        total += acc * h * h / 4;
      }
    }
    return {{m0, m1}, total, 1e-9 * std::abs(total)};
  }

  // polar route around the origin: radial adaptive x angular composite
  double theta_lo = 0, theta_hi = 2 * M_PI;
  bool full_circle = bx0 <= 0 && bx1 >= 0 && by0 <= 0 && by1 >= 0;
  if (!full_circle) {
    double tc = std::atan2(c[1], c[0]);
    double spread = 0;
    for (double cx : {bx0, bx1}) {
      for (double cy : {by0, by1}) {
        double a = std::atan2(cy, cx) - tc;
        while (a > M_PI) a -= 2 * M_PI;
        while (a < -M_PI) a += 2 * M_PI;
        spread = std::max(spread, std::abs(a));
      }
    }
    theta_lo = tc - spread;
    theta_hi = tc + spread;
  }
  auto ring = [&](double t) {
    const int panels = 96;
    static const double g3x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double g3w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    double dt = (theta_hi - theta_lo) / panels;
    double acc = 0;
    for (int p = 0; p < panels; ++p) {
      double t0 = theta_lo + p * dt;
      for (int q = 0; q < 3; ++q) {
        double th = t0 + (g3x[q] + 1) * dt / 2;
        acc += g3w[q] * A2(t * std::cos(th), t * std::sin(th));
      }
    }
    return acc * dt / 2;
  };
  auto f = [&](double t) { return t * K.density(t) * ring(t); };
  double rlo = std::max({dmin, eps, K.inner_cut()});
  double rhi = std::min({dmax, E, K.support_radius()});
  if (rhi <= rlo) return {{m0, m1}, 0.0, 0.0};
  auto r = quad::integrate(f, rlo, rhi, 1e-8, 1e-15);
  return {{m0, m1}, r.value, r.error + 1e-7 * std::abs(r.value)};
}

}  // namespace

FormMatrix assemble(std::shared_ptr<const LevyMeasure> nu, std::shared_ptr<const Grid> grid) {
  const Grid& g = *grid;
  if (nu->dim() != g.dim) throw SpecError("measure and grid dimensions differ");
  if (g.basis == Basis::P0 && !nu->small_jump_integrable() && !nu->finite_mass())
    throw AdmissibilityError(
        "P0 basis inadmissible: indicators have infinite energy for this measure; use P1");

  FormMatrix fm;
  fm.grid = grid;
  fm.measure = nu;
  const int s = g.stencil_halfwidth();
  const double E = g.lattice_diameter() + (s + 2) * g.h;  // cushion: no pair box straddles E
  fm.trunc_radius = E;

  Stencil PW(g.dim), PWsmall(g.dim), Ssmall(g.dim);
  double pair_mass = 0, kappa = 0, sigma2 = 0, err = 0, eps_used = 0;

  nu->for_each_component([&](const LevyMeasure& comp) {
    if (comp.kind() == LevyMeasure::Kind::Atomic) {
      std::vector<LagValue> vals;
      for (const auto& p : comp.atom_pairs()) {
        pair_mass += 2 * p.weight;
        atomic_pair_weights(g, p, vals);
      }
      for (const auto& v : vals) PW.add(v.lag, v.value);
      kappa += comp.far_tail().mass;
      return;
    }
    const RadialKernel& K = comp.kernel();
    double eps = std::max(g.h / 2, K.inner_cut());
    eps_used = std::max(eps_used, eps);
    sigma2 += K.second_moment_below(eps);
    kappa += K.mass_above(E);
    pair_mass += K.mass_between(eps, E);

    if (g.dim == 1) {
      std::vector<LagValue> vals(std::size_t(g.shape[0]));
      par::parallel_for(vals.size(), [&](std::size_t m) {
        vals[m] = radial_pw_1d(K, g, int(m), eps, E);
      });
      for (const auto& v : vals) {
        if (v.value != 0) PW.add_symmetric(v.lag, v.value);
        err += v.error * (v.lag[0] == 0 ? 1 : 2);
      }
      for (int m = 0; m <= s; ++m) {
        LagValue v = radial_small_stiffness_1d(K, g, m, eps);
        if (v.value != 0) Ssmall.add_symmetric(v.lag, v.value);
        err += v.error * (m == 0 ? 1 : 2);
      }
      // exact sub-eps pair weights for the restricted double sums; only P0
      // cells have finite pair weights at touching lags (P1 overlaps do not
      // vanish there, so their sub-eps weights are genuinely divergent)
      if (g.basis == Basis::P0 &&
          (K.small_jump_integrable() || std::isfinite(comp.total_mass()))) {
        for (int m = 1; m <= s; ++m) {
          LagValue v = radial_pw_small_1d(K, g, m, eps);
          PWsmall.add_symmetric(v.lag, v.value);
        }
      }
    } else {
      int mmax0 = g.shape[0] - 1, mmax1 = g.shape[1] - 1;
      int mtop = std::max(mmax0, mmax1);
      std::vector<std::array<int, 2>> classes;
      for (int m0 = 0; m0 <= mtop; ++m0)
        for (int m1 = 0; m1 <= m0; ++m1) {
          if (m0 > mmax0 && m1 > mmax1) continue;
          classes.push_back({m0, m1});
        }
      std::vector<LagValue> vals(classes.size());
      par::parallel_for(classes.size(), [&](std::size_t i) {
        vals[i] = radial_pw_2d(K, g, classes[i][0], classes[i][1], eps, E);
      });
      for (int m0 = 0; m0 <= s; ++m0) {
        for (int m1 = 0; m1 <= m0; ++m1) {
          LagValue v = radial_small_stiffness_2d(K, g, m0, m1, eps);
          if (v.value == 0) continue;
          std::vector<std::array<int, 2>> lags = {{m0, m1}};
          if (m0 != m1) lags.push_back({m1, m0});
          for (auto l : lags) {
            Ssmall.add(l, v.value);
            if (l[0] != 0) Ssmall.add({-l[0], l[1]}, v.value);
            if (l[1] != 0) Ssmall.add({l[0], -l[1]}, v.value);
            if (l[0] != 0 && l[1] != 0) Ssmall.add({-l[0], -l[1]}, v.value);
            err += v.error;
          }
        }
      }
      for (const auto& v : vals) {
        if (v.value == 0) continue;
        int a = v.lag[0], b = v.lag[1];
        // distribute over sign flips and the axis swap (kernel is isotropic,
        // the lattice spacing is equal per axis)
        std::vector<std::array<int, 2>> lags = {{a, b}};
        if (a != b) lags.push_back({b, a});
        for (auto l : lags) {
          if (std::abs(l[0]) > mmax0 || std::abs(l[1]) > mmax1) continue;
          std::vector<std::array<int, 2>> signed_lags;
          signed_lags.push_back(l);
          if (l[0] != 0) signed_lags.push_back({-l[0], l[1]});
          if (l[1] != 0) signed_lags.push_back({l[0], -l[1]});
          if (l[0] != 0 && l[1] != 0) signed_lags.push_back({-l[0], -l[1]});
          for (auto sl : signed_lags) {
            PW.add(sl, v.value);
            err += v.error;
          }
        }
      }
    }
  });

  fm.kappa = kappa;
  fm.sigma2_eps = sigma2;
  fm.pairwise_mass = pair_mass;
  fm.eps_pv = eps_used;
  fm.assembly_error = err;

  // mass stencil A(mh) over the overlap band
  for (int m1 = (g.dim == 2 ? -s : 0); m1 <= (g.dim == 2 ? s : 0); ++m1) {
    for (int m0 = -s; m0 <= s; ++m0) {
      Point v{m0 * g.h, m1 * g.h};
      double a = autocorr(g, v);
      if (a != 0) fm.mass.add({m0, m1}, a);
    }
  }

  // stiffness = (pairwise mass + killing) * mass band - pair weights,
  // plus the exact sub-eps_pv second-difference integrals
  for (const auto& e : fm.mass.entries()) fm.stiffness.add(e.lag, (pair_mass + kappa) * e.value);
  for (const auto& e : PW.entries()) fm.stiffness.add(e.lag, -e.value);
  for (const auto& e : Ssmall.entries()) fm.stiffness.add(e.lag, e.value);

  for (const auto& e : PW.entries()) fm.pair_weights.add(e.lag, e.value);
  for (const auto& e : PWsmall.entries()) fm.pair_weights.add(e.lag, e.value);
  fm.stiffness.entries();
  fm.mass.entries();
  fm.pair_weights.entries();
  return fm;
}

// ---------------------------------------------------------------------------
// FormMatrix operations

double FormMatrix::quadratic(const GridFunction& u) const {
  return stiffness.quadratic(*grid, u.coeffs);
}

double FormMatrix::bilinear(const GridFunction& u, const GridFunction& v) const {
  return stiffness.bilinear(*grid, u.coeffs, v.coeffs);
}

void FormMatrix::apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  stiffness.apply(*grid, u, out);
}

double FormMatrix::mass_quadratic(const GridFunction& u) const {
  return mass.quadratic(*grid, u.coeffs);
}

double FormMatrix::mass_bilinear(const GridFunction& u, const GridFunction& v) const {
  return mass.bilinear(*grid, u.coeffs, v.coeffs);
}

void FormMatrix::mass_apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  mass.apply(*grid, u, out);
}

double FormMatrix::mass_quadratic_masked(const GridFunction& u,
                                         const std::vector<uint8_t>& mask) const {
  Eigen::VectorXd masked(u.coeffs.size());
  for (Eigen::Index i = 0; i < masked.size(); ++i) masked[i] = mask[i] ? u.coeffs[i] : 0.0;
  return mass.quadratic(*grid, masked);
}

double FormMatrix::pair_sum(const GridFunction& u, const std::vector<uint8_t>& A,
                            const std::vector<uint8_t>& B) const {
  const Grid& g = *grid;
  const int s0 = g.shape[0], s1 = g.shape[1];
  Eigen::VectorXd ma(u.coeffs.size()), mb(u.coeffs.size());
  for (Eigen::Index i = 0; i < ma.size(); ++i) {
    ma[i] = A[i] ? 1.0 : 0.0;
    mb[i] = B[i] ? 1.0 : 0.0;
  }
  double total = 0;
  for (const auto& e : pair_weights.entries()) {
    const int m0 = e.lag[0], m1 = e.lag[1];
    if (m0 == 0 && m1 == 0) continue;  // same-dof pairs contribute (u_i-u_i)^2 = 0
    const int i1lo = std::max(0, -m1), i1hi = s1 - std::max(0, m1);
    const int i0lo = std::max(0, -m0), i0hi = s0 - std::max(0, m0);
    if (i0hi <= i0lo) continue;
    double acc = 0;
    for (int i1 = i1lo; i1 < i1hi; ++i1) {
      const std::size_t base = std::size_t(i1) * s0 + i0lo;
      const std::size_t shifted = std::size_t(i1 + m1) * s0 + (i0lo + m0);
      const double* uu = u.coeffs.data();
      const int n = i0hi - i0lo;
      for (int k = 0; k < n; ++k) {
        double d = uu[base + k] - uu[shifted + k];
        acc += d * d * ma[base + k] * mb[shifted + k];
      }
    }
    total += e.value * acc;
  }
  return total;
}

double FormMatrix::beyond_mass(std::size_t dof) const {
  if (beyond_cache_.empty()) beyond_cache_.assign(grid->size(), -1.0);
  if (beyond_cache_[dof] >= 0) return beyond_cache_[dof];
  Point lo, hi;
  support_box(*grid, lo, hi);
  Domain box = grid->dim == 1 ? Domain::interval(lo[0], hi[0]) : Domain::box(lo, hi);
  TailMass tm = measure->tail_mass(Region::complement_shifted(box, grid->coord(dof)));
  beyond_cache_[dof] = tm.value;
  return tm.value;
}

double FormMatrix::energy(const GridFunction& u, const GridFunction& f) const {
  const Grid& g = *grid;
  std::vector<uint8_t> halo(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) halo[i] = !g.interior[i];
  double q = quadratic(u);
  double hh = pair_sum(u, halo, halo) + 2.0 * kappa * mass_quadratic_masked(u, halo);
  return 0.25 * (2.0 * q - hh) - mass_bilinear(f, u);
}

void FormMatrix::write_coo(std::ostream& os) const {
  const Grid& g = *grid;
  const auto& es = stiffness.entries();
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto ij = g.unflat(i);
    std::vector<std::pair<std::size_t, double>> row;
    for (const auto& e : es) {
      int j0 = ij[0] + e.lag[0], j1 = ij[1] + e.lag[1];
      if (j0 < 0 || j0 >= g.shape[0] || j1 < 0 || j1 >= g.shape[1]) continue;
      row.emplace_back(g.flat(j0, j1), e.value);
    }
    std::sort(row.begin(), row.end());
    for (const auto& [j, v] : row) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", i, j, v);
      os << buf;
    }
  }
}

// ---------------------------------------------------------------------------
// shift energies and the Dirac decomposition

namespace {

/// Precomputed coefficient autocorrelation R(d) = sum_i u_i u_{i+d}, and the
/// derived exact shift energy <u,u>_{delta_y} = ||u||_L2^2 - ∫ u(x) u(x+y) dx.
struct ShiftEnergy {
  const Grid& g;
  Eigen::VectorXd R;  // over the two-sided lag box, flattened
  int L0, L1;
  double massq;

  explicit ShiftEnergy(const GridFunction& u, const FormMatrix& fm) : g(*u.grid) {
    L0 = g.shape[0] - 1;
    L1 = g.dim == 2 ? g.shape[1] - 1 : 0;
    R.setZero(std::size_t(2 * L0 + 1) * std::size_t(2 * L1 + 1));
    const int s0 = g.shape[0], s1 = g.shape[1];
    for (int m1 = -L1; m1 <= L1; ++m1) {
      for (int m0 = -L0; m0 <= L0; ++m0) {
        const int i1lo = std::max(0, -m1), i1hi = s1 - std::max(0, m1);
        const int i0lo = std::max(0, -m0), i0hi = s0 - std::max(0, m0);
        double acc = 0;
        for (int i1 = i1lo; i1 < i1hi; ++i1) {
          const double* a = u.coeffs.data() + std::size_t(i1) * s0 + i0lo;
          const double* b = u.coeffs.data() + std::size_t(i1 + m1) * s0 + (i0lo + m0);
          for (int k = 0; k < i0hi - i0lo; ++k) acc += a[k] * b[k];
        }
        R[idx(m0, m1)] = acc;
      }
    }
    massq = fm.mass_quadratic(u);
  }

  std::size_t idx(int m0, int m1) const {
    return std::size_t(m0 + L0) + std::size_t(2 * L0 + 1) * std::size_t(m1 + L1);
  }

  /// ∫ u(x) u(x+y) dx = sum_d R(d) A(dh + y)
  double correlation(const Point& y) const {
    int s = g.stencil_halfwidth();
    double total = 0;
    int c0 = int(std::floor(-y[0] / g.h));
    int c1 = g.dim == 2 ? int(std::floor(-y[1] / g.h)) : 0;
    for (int m1 = c1 - s; m1 <= c1 + s; ++m1) {
      if (g.dim == 2 && (m1 < -L1 || m1 > L1)) continue;
      if (g.dim == 1 && m1 != 0) continue;
      for (int m0 = c0 - s; m0 <= c0 + s; ++m0) {
        if (m0 < -L0 || m0 > L0) continue;
        Point v{m0 * g.h + y[0], g.dim == 2 ? m1 * g.h + y[1] : 0.0};
        double a = autocorr(g, v);
        if (a != 0) total += R[idx(m0, g.dim == 2 ? m1 : 0)] * a;
      }
    }
    return total;
  }

  double energy(const Point& y) const { return massq - correlation(y); }
};

}  // namespace

double shift_energy(const GridFunction& u, const Point& y) {
  // standalone evaluation; assembles the mass norm directly
  FormMatrix fm;
  fm.grid = u.grid;
  const Grid& g = *u.grid;
  int s = g.stencil_halfwidth();
  for (int m1 = (g.dim == 2 ? -s : 0); m1 <= (g.dim == 2 ? s : 0); ++m1)
    for (int m0 = -s; m0 <= s; ++m0) {
      double a = autocorr(g, {m0 * g.h, m1 * g.h});
      if (a != 0) fm.mass.add({m0, m1}, a);
    }
  ShiftEnergy se(u, fm);
  return se.energy(y);
}

DecompositionResult delta_decomposition(const LevyMeasure& nu, const GridFunction& u,
                                        const FormMatrix& reference) {
  const Grid& g = *u.grid;
  ShiftEnergy se(u, reference);
  DecompositionResult res;
  const double E = reference.trunc_radius;

  nu.for_each_component([&](const LevyMeasure& comp) {
    if (comp.kind() == LevyMeasure::Kind::Atomic) {
      for (const auto& p : comp.atom_pairs()) res.value += 2.0 * p.weight * se.energy(p.y);
      res.value += comp.far_tail().mass * se.massq;
      return;
    }
    const RadialKernel& K = comp.kernel();
    double eps = std::max(g.h / 2, K.inner_cut());
    res.value += K.mass_above(E) * se.massq;
    if (g.dim == 1) {
      auto f = [&](double y) { return 2.0 * se.energy(pt(y)) * K.density(y); };
      if (K.inner_cut() == 0) {
        // shift energies vanish at y = 0, so the singular region integrates directly
        auto rs = quad::improper_at_zero(f, eps, 1e-9, 1e-15);
        res.value += rs.value;
        res.tolerance += rs.error;
      }
      std::vector<double> brk = {1.0, K.support_radius(), K.inner_cut()};
      brk.erase(std::remove_if(brk.begin(), brk.end(), [](double b) { return !std::isfinite(b); }),
                brk.end());
      auto r = quad::integrate_pts(f, eps, E, brk, 1e-9, 1e-14);
      res.value += r.value;
      res.tolerance += r.error;
    } else {
      auto ring = [&](double t) {
        const int panels = 128;
        double acc = 0;
        for (int p = 0; p < panels; ++p) {
          double th = 2 * M_PI * (p + 0.5) / panels;
          acc += se.energy({t * std::cos(th), t * std::sin(th)});
        }
        return acc * 2 * M_PI / panels;
      };
      auto f = [&](double t) { return t * K.density(t) * ring(t); };
      if (K.inner_cut() == 0) {
        auto rs = quad::improper_at_zero(f, eps, 1e-7, 1e-13);
        res.value += rs.value;
        res.tolerance += rs.error + 1e-5 * std::abs(rs.value);
      }
      double rhi = std::min(E, K.support_radius());
      if (rhi > eps) {
        auto r = quad::integrate(f, eps, rhi, 1e-7, 1e-13);
        res.value += r.value;
        res.tolerance += r.error + 1e-5 * std::abs(r.value);
      }
    }
  });

  res.tolerance += reference.assembly_error * se.massq / std::max(reference.mass.coeff({0, 0}), 1e-300);
  res.tolerance += 1e-10 * std::abs(res.value) + 1e-14;
  return res;
}

// ---------------------------------------------------------------------------
// norms

double grid_norm(const FormMatrix& fm, const GridFunction& u, NormSpace space,
                 const std::vector<uint8_t>* mask) {
  const Grid& g = *u.grid;
  std::vector<uint8_t> full(g.size(), 1);
  switch (space) {
    case NormSpace::VOmega:
    case NormSpace::HOmega: {
      double l2 = fm.mass_quadratic_masked(u, g.interior);
      double semi = fm.pair_sum(u, g.interior, full);
      double vol = std::pow(g.h, g.dim);  // dof mass for the pointwise killing density
      double beyond = 0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.interior[i] && u.coeffs[i] != 0)
          beyond += u.coeffs[i] * u.coeffs[i] * fm.beyond_mass(i) * vol;
      return std::sqrt(l2 + 0.5 * (semi + beyond));
    }
    case NormSpace::HFull: {
      double l2 = fm.mass_quadratic(u);
      double semi = fm.pair_sum(u, full, full);
      double vol = std::pow(g.h, g.dim);
      double beyond = 0;
      for (std::size_t i = 0; i < g.size(); ++i)
        if (u.coeffs[i] != 0) beyond += u.coeffs[i] * u.coeffs[i] * fm.beyond_mass(i) * vol;
      return std::sqrt(l2 + 0.5 * semi + beyond);
    }
    case NormSpace::HRestricted: {
      if (!mask) throw SpecError("HRestricted norm requires a dof mask");
      return std::sqrt(fm.pair_sum(u, *mask, *mask));
    }
  }
  throw SpecError("grid_norm: unknown space");
}

}  // namespace nld
