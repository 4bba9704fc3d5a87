#include "nld/levy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "quad.hpp"

namespace nld {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Surface measure of the unit sphere in R^n (2 in 1-D, 2*pi in 2-D).
double sphere_factor(int dim) { return dim == 1 ? 2.0 : 2.0 * M_PI; }

}  // namespace

// ---------------------------------------------------------------------------
// RadialKernel

double RadialKernel::stable_normalization(double alpha, int dim) {
  double n = dim;
  return std::pow(2.0, alpha) * std::tgamma((n + alpha) / 2.0) /
         (std::pow(M_PI, n / 2.0) * std::abs(std::tgamma(-alpha / 2.0)));
}

RadialKernel RadialKernel::fractional_stable(double alpha, int dim) {
  if (!(alpha > 0 && alpha < 2)) throw SpecError("fractional stable requires alpha in (0,2)");
  RadialKernel k;
  k.profile_ = Profile::FractionalStable;
  k.dim_ = dim;
  k.alpha_ = alpha;
  k.amplitude_ = 1.0 / stable_normalization(alpha, dim);
  return k;
}

RadialKernel RadialKernel::compact_quadratic_cap(double r1, int dim) {
  if (!(r1 > 0)) throw SpecError("compact kernel requires r1 > 0");
  RadialKernel k;
  k.profile_ = Profile::CompactSupport;
  k.dim_ = dim;
  k.support_radius_ = r1;
  return k;
}

RadialKernel RadialKernel::tempered(double alpha, double decay, int dim) {
  if (!(alpha > 0 && alpha < 2)) throw SpecError("tempered kernel requires alpha in (0,2)");
  if (!(decay > 0)) throw SpecError("tempered kernel requires decay > 0");
  RadialKernel k;
  k.profile_ = Profile::Tempered;
  k.dim_ = dim;
  k.alpha_ = alpha;
  k.decay_ = decay;
  k.amplitude_ = 1.0 / stable_normalization(alpha, dim);
  return k;
}

RadialKernel RadialKernel::user_profile(std::function<double(double)> V, int dim,
                                        double support_radius) {
  RadialKernel k;
  k.profile_ = Profile::UserProfile;
  k.dim_ = dim;
  k.user_ = std::move(V);
  k.support_radius_ = support_radius;
  return k;
}

double RadialKernel::density(double t) const {
  if (t <= inner_cut_ || t > support_radius_) return 0;
  switch (profile_) {
    case Profile::FractionalStable:
      return amplitude_ * std::pow(t, -(dim_ + alpha_));
    case Profile::CompactSupport: {
      double s = t / support_radius_;
      return std::max(0.0, 1.0 - s * s);
    }
    case Profile::Tempered:
      return amplitude_ * std::pow(t, -(dim_ + alpha_)) * std::exp(-decay_ * t);
    case Profile::UserProfile:
      return user_(t);
  }
  return 0;
}

RadialKernel RadialKernel::with_inner_cut(double delta) const {
  RadialKernel k = *this;
  k.inner_cut_ = std::max(inner_cut_, delta);
  k.sji_cache_.reset();
  return k;
}

double RadialKernel::mass_above(double r) const {
  r = std::max(r, inner_cut_);
  if (r >= support_radius_) return 0;
  double w = sphere_factor(dim_);
  if (profile_ == Profile::FractionalStable) {
    if (r <= 0) return kInf;
    return w * amplitude_ * std::pow(r, -alpha_) / alpha_;
  }
  if (r <= 0 && (profile_ == Profile::Tempered)) return kInf;
  auto f = [&](double t) { return w * std::pow(t, dim_ - 1) * density(t); };
  if (std::isfinite(support_radius_)) {
    if (r <= 0) {
      // CompactSupport and truncated user kernels: possibly singular at 0
      return quad::improper_at_zero(f, support_radius_).value;
    }
    return quad::integrate(f, r, support_radius_).value;
  }
  return quad::integrate_to_inf(f, r).value;
}

double RadialKernel::mass_between(double r1, double r2) const {
  r1 = std::max(r1, inner_cut_);
  r2 = std::min(r2, support_radius_);
  if (r2 <= r1) return 0;
  double w = sphere_factor(dim_);
  if (profile_ == Profile::FractionalStable)
    return w * amplitude_ * (std::pow(r1, -alpha_) - std::pow(r2, -alpha_)) / alpha_;
  auto f = [&](double t) { return w * std::pow(t, dim_ - 1) * density(t); };
  if (r1 <= 0) return quad::improper_at_zero(f, r2).value;
  return quad::integrate(f, r1, r2).value;
}

double RadialKernel::second_moment_below(double eps) const {
  eps = std::min(eps, support_radius_);
  if (eps <= inner_cut_) return 0;
  double w = sphere_factor(dim_);
  if (profile_ == Profile::FractionalStable && inner_cut_ == 0)
    return w * amplitude_ * std::pow(eps, 2 - alpha_) / (2 - alpha_);
  auto f = [&](double t) { return w * std::pow(t, dim_ + 1) * density(t); };
  try {
    return quad::improper_at_zero(f, eps).value;
  } catch (const DivergenceError&) {
    throw DivergenceError("second moment diverges at the origin (not a Levy kernel)", "origin");
  }
}

double RadialKernel::first_moment_below(double eps) const {
  eps = std::min(eps, support_radius_);
  if (eps <= inner_cut_) return 0;
  double w = sphere_factor(dim_);
  if (profile_ == Profile::FractionalStable && inner_cut_ == 0) {
    if (alpha_ >= 1) return kInf;
    return w * amplitude_ * std::pow(eps, 1 - alpha_) / (1 - alpha_);
  }
  auto f = [&](double t) { return w * std::pow(t, dim_) * density(t); };
  try {
    return quad::improper_at_zero(f, eps).value;
  } catch (const DivergenceError&) {
    return kInf;
  }
}

double RadialKernel::levy_moment() const {
  double small = second_moment_below(1.0);  // throws with regime "origin" if divergent
  double tail;
  try {
    tail = mass_above(1.0);
  } catch (const DivergenceError&) {
    throw DivergenceError("Levy moment diverges at infinity", "infinity");
  }
  if (!std::isfinite(tail)) throw DivergenceError("Levy moment diverges at infinity", "infinity");
  return small + tail;
}

bool RadialKernel::small_jump_integrable() const {
  if (sji_cache_) return *sji_cache_;
  bool v;
  if (inner_cut_ > 0) v = true;
  else if (profile_ == Profile::FractionalStable || profile_ == Profile::Tempered) v = alpha_ < 1;
  else v = std::isfinite(first_moment_below(1.0));
  sji_cache_ = v;
  return v;
}

// ---------------------------------------------------------------------------
// LevyMeasure

LevyMeasure LevyMeasure::atomic(const std::vector<std::pair<Point, double>>& atoms, int dim,
                                FarTail far, int* mirrors_added) {
  if (dim != 1 && dim != 2) throw SpecError("supported dimensions are 1 and 2");
  if (far.mass < 0) throw SpecError("far-tail mass must be nonnegative");
  if (far.mass > 0 && far.radius < 1)
    throw SpecError("far-tail radius must be >= 1 so the tail contributes its mass to the Levy moment");

  // canonical representative of {y, -y}: lexicographically positive
  auto canonical = [](const Point& y) { return y[0] > 0 || (y[0] == 0 && y[1] > 0); };
  struct Acc {
    double wpos = 0, wneg = 0;
    bool pos = false, neg = false;
  };
  std::map<std::pair<double, double>, Acc> table;
  for (const auto& [y, w] : atoms) {
    if (y[0] == 0 && y[1] == 0) throw SpecError("atom at the origin (nu({0}) must vanish)");
    if (dim == 1 && y[1] != 0) throw SpecError("1-D atom with a second coordinate");
    if (!(w > 0)) throw SpecError("atom weights must be positive");
    Point c = canonical(y) ? y : -y;
    auto& acc = table[{c[0], c[1]}];
    if (canonical(y)) {
      acc.pos = true;
      acc.wpos += w;
    } else {
      acc.neg = true;
      acc.wneg += w;
    }
  }

  LevyMeasure m;
  m.kind_ = Kind::Atomic;
  m.dim_ = dim;
  m.far_ = far;
  int added = 0;
  for (const auto& [key, acc] : table) {
    Point y{key.first, key.second};
    double w;
    if (acc.pos && acc.neg) {
      if (std::abs(acc.wpos - acc.wneg) > 1e-12 * std::max(acc.wpos, acc.wneg))
        throw SpecError("asymmetric atom weights at +-(" + std::to_string(y[0]) + "," +
                        std::to_string(y[1]) + ")");
      w = 0.5 * (acc.wpos + acc.wneg);
    } else {
      w = acc.pos ? acc.wpos : acc.wneg;
      ++added;  // mirror supplied
    }
    m.pairs_.push_back({y, w});
  }
  if (mirrors_added) *mirrors_added = added;

  double moment = far.mass;  // far atoms sit at |y| > radius >= 1, so (1 ∧ |y|^2) = 1
  for (const auto& p : m.pairs_) {
    double r2 = dot(p.y, p.y);
    moment += 2 * p.weight * std::min(1.0, r2);
  }
  m.levy_moment_ = moment;
  return m;
}

LevyMeasure LevyMeasure::zeta_series(int K) {
  if (K < 1) throw SpecError("zeta series requires K >= 1");
  std::vector<std::pair<Point, double>> atoms;
  atoms.reserve(2 * K);
  for (int k = 1; k <= K; ++k) {
    double w = 1.0 / (double(k) * double(k));
    atoms.push_back({pt(double(k)), w});
    atoms.push_back({pt(-double(k)), w});
  }
  long double partial = 0;
  for (int k = K; k >= 1; --k) partial += 1.0L / ((long double)k * (long double)k);
  long double tail = std::numbers::pi_v<long double> * std::numbers::pi_v<long double> / 3.0L -
                     2.0L * partial;
  FarTail far{double(std::max(tail, 0.0L)), double(K)};
  return atomic(atoms, 1, far);
}

LevyMeasure LevyMeasure::radial(RadialKernel kernel) {
  LevyMeasure m;
  m.kind_ = Kind::Radial;
  m.dim_ = kernel.dim();
  m.levy_moment_ = kernel.levy_moment();  // certifies integrability, throws otherwise
  m.kernel_ = std::make_shared<RadialKernel>(std::move(kernel));
  return m;
}

LevyMeasure LevyMeasure::mixture(std::vector<LevyMeasure> parts) {
  if (parts.empty()) throw SpecError("mixture requires at least one part");
  LevyMeasure m;
  m.kind_ = Kind::Mixture;
  m.dim_ = parts.front().dim();
  for (auto& p : parts) {
    if (p.dim() != m.dim_) throw SpecError("mixture parts must share the dimension");
    if (p.kind() == Kind::Mixture) {
      for (auto& q : p.parts_) m.parts_.push_back(q);  // keep the list flat
    } else {
      m.parts_.push_back(std::move(p));
    }
  }
  for (const auto& p : m.parts_) m.levy_moment_ += p.levy_moment();
  return m;
}

bool LevyMeasure::small_jump_integrable() const {
  switch (kind_) {
    case Kind::Atomic:
      return true;  // finitely many atoms, all away from the origin
    case Kind::Radial:
      return kernel_->small_jump_integrable();
    case Kind::Mixture:
      return std::all_of(parts_.begin(), parts_.end(),
                         [](const LevyMeasure& p) { return p.small_jump_integrable(); });
  }
  return false;
}

double LevyMeasure::total_mass() const {
  switch (kind_) {
    case Kind::Atomic: {
      double s = far_.mass;
      for (const auto& p : pairs_) s += 2 * p.weight;
      return s;
    }
    case Kind::Radial:
      try {
        return kernel_->mass_above(0.0);
      } catch (const DivergenceError&) {
        return kInf;
      }
    case Kind::Mixture: {
      double s = 0;
      for (const auto& p : parts_) s += p.total_mass();
      return s;
    }
  }
  return 0;
}

double LevyMeasure::support_radius() const {
  switch (kind_) {
    case Kind::Atomic: {
      if (far_.mass > 0) return kInf;
      double r = 0;
      for (const auto& p : pairs_) r = std::max(r, norm2(p.y));
      return r;
    }
    case Kind::Radial:
      return kernel_->support_radius();
    case Kind::Mixture: {
      double r = 0;
      for (const auto& p : parts_) r = std::max(r, p.support_radius());
      return r;
    }
  }
  return 0;
}

namespace {

/// nu(region) for a radial kernel; the structure of each region keeps this a
/// 1-D radial or angular quadrature.
TailMass radial_tail_mass(const RadialKernel& k, const Region& region, int dim) {
  switch (region.kind()) {
    case Region::Kind::Annulus:
      return {k.mass_between(region.r1(), region.r2()), 1e-12};
    case Region::Kind::BallComplement: {
      double c = norm2(region.center());
      if (c == 0) return {k.mass_above(region.radius()), 1e-12};
      if (c > region.radius()) {
        // the region contains a neighborhood of the origin
        double total = k.mass_above(0.0);
        if (!std::isfinite(total))
          throw DivergenceError("ball complement contains the origin and the kernel mass is infinite",
                                "origin");
        double inside;
        if (dim == 1) {
          inside = 0.5 * (k.mass_above(c - region.radius()) - k.mass_above(c + region.radius()));
        } else {
          double rho = region.radius();
          auto f = [&](double t) {
            double cosphi = (t * t + c * c - rho * rho) / (2 * t * c);
            double phi = std::acos(std::clamp(cosphi, -1.0, 1.0));
            return t * k.density(t) * 2.0 * phi;
          };
          inside = quad::integrate(f, c - rho, c + rho).value;
        }
        return {total - inside, 1e-10 * std::abs(total)};
      }
      // origin inside the excluded ball
      if (dim == 1) {
        double a = region.center()[0] - region.radius();
        double b = region.center()[0] + region.radius();
        // region = (-inf, a] ∪ [b, inf); a <= 0 <= b here
        double v = 0.5 * (k.mass_above(-a) + k.mass_above(b));
        return {v, 1e-12 * std::abs(v)};
      }
      // 2-D: integrate the angular tail beyond the off-center circle
      double rho = region.radius();
      Point cc = region.center();
      auto extent = [&](double theta) {
        Point e{std::cos(theta), std::sin(theta)};
        double b = dot(cc, e);
        double disc = b * b - dot(cc, cc) + rho * rho;
        return b + std::sqrt(std::max(disc, 0.0));
      };
      auto f = [&](double theta) { return k.mass_above(extent(theta)); };
      auto r = quad::integrate(f, 0, 2 * M_PI, 1e-9);
      return {r.value / (2 * M_PI) * 1.0, r.error / (2 * M_PI)};
    }
    case Region::Kind::ComplementShifted: {
      const Domain& D = region.domain();
      const Point& x = region.shift();
      if (!D.contains(x)) {
        double total = k.mass_above(0.0);
        if (!std::isfinite(total))
          throw DivergenceError("shifted complement contains the origin and the kernel mass is infinite",
                                "origin");
        // subtract nu(D - x) over the domain not containing the origin
        double inside = 0;
        if (D.dim() == 1) {
          double a = D.a() - x[0], b = D.b() - x[0];
          auto f = [&](double t) { return k.density(std::abs(t)); };
          inside = quad::integrate(f, a, b, 1e-10).value;
        } else {
          // 2-D: nested tensor quadrature over the shifted domain
          BoundingBox bb = D.bounding_box();
          auto fy = [&](double y1) {
            auto fx = [&](double y2) {
              Point y{y1, y2};
              return D.contains(x + y) ? k.density(norm2(y)) : 0.0;
            };
            return quad::integrate(fx, bb.lo[1] - x[1], bb.hi[1] - x[1], 1e-8).value;
          };
          inside = quad::integrate(fy, bb.lo[0] - x[0], bb.hi[0] - x[0], 1e-7).value;
        }
        return {total - inside, 1e-8 * std::abs(total - inside) + 1e-13};
      }
      if (D.dim() == 1) {
        double v = 0.5 * (k.mass_above(x[0] - D.a()) + k.mass_above(D.b() - x[0]));
        return {v, 1e-12 * std::abs(v)};
      }
      // x interior, 2-D: nu(region) = (1/2pi) ∫ mass_above(radial extent) dtheta
      std::vector<double> brk;
      if (D.kind() == Domain::Kind::Box) {
        for (Point corner : {D.box_lo(), D.box_hi(), pt(D.box_lo()[0], D.box_hi()[1]),
                             pt(D.box_hi()[0], D.box_lo()[1])}) {
          double a = std::atan2(corner[1] - x[1], corner[0] - x[0]);
          brk.push_back(a < 0 ? a + 2 * M_PI : a);
        }
      }
      auto f = [&](double theta) { return k.mass_above(D.radial_extent(x, theta)); };
      auto r = quad::integrate_pts(f, 0, 2 * M_PI, brk, 1e-10);
      return {r.value / (2 * M_PI), r.error / (2 * M_PI) + 1e-13};
    }
  }
  throw SpecError("tail_mass: unknown region kind");
}

}  // namespace

TailMass LevyMeasure::tail_mass(const Region& region) const {
  switch (kind_) {
    case Kind::Atomic: {
      TailMass tm;
      for (const auto& p : pairs_) {
        if (region.contains(p.y)) tm.value += p.weight;
        if (region.contains(-p.y)) tm.value += p.weight;
      }
      if (far_.mass > 0) {
        if (region.contains_far_ball(far_.radius)) tm.value += far_.mass;
        else tm.error += far_.mass;  // unknown placement of the far atoms
      }
      return tm;
    }
    case Kind::Radial:
      return radial_tail_mass(*kernel_, region, dim_);
    case Kind::Mixture: {
      TailMass tm;
      for (const auto& p : parts_) {
        TailMass t = p.tail_mass(region);
        tm.value += t.value;
        tm.error += t.error;
      }
      return tm;
    }
  }
  return {};
}

LevyMeasure LevyMeasure::truncate_small_jumps(double delta) const {
  if (delta < 0) throw SpecError("truncation level must be nonnegative");
  switch (kind_) {
    case Kind::Atomic: {
      LevyMeasure m = *this;
      m.pairs_.clear();
      double moment = far_.mass;
      for (const auto& p : pairs_)
        if (norm2(p.y) > delta) {
          m.pairs_.push_back(p);
          moment += 2 * p.weight * std::min(1.0, dot(p.y, p.y));
        }
      m.levy_moment_ = moment;
      return m;
    }
    case Kind::Radial: {
      if (delta == 0) {
        if (!finite_mass())
          throw SpecError("truncate_small_jumps(0) on a kernel with infinite total mass");
        return *this;
      }
      LevyMeasure m;
      m.kind_ = Kind::Radial;
      m.dim_ = dim_;
      m.kernel_ = std::make_shared<RadialKernel>(kernel_->with_inner_cut(delta));
      m.levy_moment_ = m.kernel_->levy_moment();
      return m;
    }
    case Kind::Mixture: {
      std::vector<LevyMeasure> parts;
      for (const auto& p : parts_) parts.push_back(p.truncate_small_jumps(delta));
      return mixture(std::move(parts));
    }
  }
  return *this;
}

void LevyMeasure::for_each_component(const std::function<void(const LevyMeasure&)>& f) const {
  if (kind_ == Kind::Mixture) {
    for (const auto& p : parts_) f(p);
  } else {
    f(*this);
  }
}

}  // namespace nld
