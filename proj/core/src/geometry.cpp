#include "nld/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nld {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// PolarGraph

double PolarGraph::rho(double t) const {
  double r = base;
  for (std::size_t k = 0; k < fourier.size(); ++k) {
    double kk = double(k + 1);
    r += fourier[k][0] * std::cos(kk * t) + fourier[k][1] * std::sin(kk * t);
  }
  return r;
}

double PolarGraph::drho(double t) const {
  double r = 0;
  for (std::size_t k = 0; k < fourier.size(); ++k) {
    double kk = double(k + 1);
    r += kk * (-fourier[k][0] * std::sin(kk * t) + fourier[k][1] * std::cos(kk * t));
  }
  return r;
}

double PolarGraph::ddrho(double t) const {
  double r = 0;
  for (std::size_t k = 0; k < fourier.size(); ++k) {
    double kk = double(k + 1);
    r -= kk * kk * (fourier[k][0] * std::cos(kk * t) + fourier[k][1] * std::sin(kk * t));
  }
  return r;
}

Point PolarGraph::boundary_point(double t) const {
  double r = rho(t);
  return {r * std::cos(t), r * std::sin(t)};
}

double PolarGraph::curvature(double t) const {
  double r = rho(t), r1 = drho(t), r2 = ddrho(t);
  double num = r * r + 2 * r1 * r1 - r * r2;
  double den = std::pow(r * r + r1 * r1, 1.5);
  return num / den;
}

// ---------------------------------------------------------------------------
// Domain

Domain Domain::interval(double a, double b) {
  if (!(a < b)) throw SpecError("interval requires a < b");
  Domain d;
  d.kind_ = Kind::Interval;
  d.dim_ = 1;
  d.lo_ = {a, 0};
  d.hi_ = {b, 0};
  return d;
}

Domain Domain::box(Point lo, Point hi) {
  if (!(lo[0] < hi[0] && lo[1] < hi[1])) throw SpecError("box requires lo < hi per axis");
  Domain d;
  d.kind_ = Kind::Box;
  d.dim_ = 2;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

Domain Domain::disk(Point center, double radius) {
  if (!(radius > 0)) throw SpecError("disk requires radius > 0");
  Domain d;
  d.kind_ = Kind::Disk;
  d.dim_ = 2;
  d.center_ = center;
  d.radius_ = radius;
  return d;
}

Domain Domain::polar_graph(PolarGraph g) {
  Domain d;
  d.kind_ = Kind::PolarGraph;
  d.dim_ = 2;
  d.graph_ = std::move(g);
  // require a strictly positive radial function
  for (int i = 0; i < 1024; ++i) {
    if (d.graph_.rho(2 * M_PI * i / 1024.0) <= 0)
      throw SpecError("polar graph radius must stay positive");
  }
  return d;
}

bool Domain::contains(const Point& x) const {
  switch (kind_) {
    case Kind::Interval:
      return lo_[0] < x[0] && x[0] < hi_[0];
    case Kind::Box:
      return lo_[0] < x[0] && x[0] < hi_[0] && lo_[1] < x[1] && x[1] < hi_[1];
    case Kind::Disk:
      return norm2(x - center_) < radius_;
    case Kind::PolarGraph: {
      double t = std::atan2(x[1], x[0]);
      return norm2(x) < graph_.rho(t);
    }
  }
  return false;
}

double Domain::diameter() const {
  switch (kind_) {
    case Kind::Interval:
      return hi_[0] - lo_[0];
    case Kind::Box:
      return norm2(hi_ - lo_);
    case Kind::Disk:
      return 2 * radius_;
    case Kind::PolarGraph: {
      // diameter of the sampled boundary
      std::vector<Point> pts;
      for (int i = 0; i < 256; ++i) pts.push_back(graph_.boundary_point(2 * M_PI * i / 256.0));
      double d = 0;
      for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, norm2(pts[i] - pts[j]));
      return d;
    }
  }
  return 0;
}

BoundingBox Domain::bounding_box() const {
  switch (kind_) {
    case Kind::Interval:
    case Kind::Box:
      return {lo_, hi_};
    case Kind::Disk:
      return {center_ - pt(radius_, radius_), center_ + pt(radius_, radius_)};
    case Kind::PolarGraph: {
      BoundingBox bb{pt(kInf, kInf), pt(-kInf, -kInf)};
      for (int i = 0; i < 1024; ++i) {
        Point p = graph_.boundary_point(2 * M_PI * i / 1024.0);
        bb.lo[0] = std::min(bb.lo[0], p[0]);
        bb.lo[1] = std::min(bb.lo[1], p[1]);
        bb.hi[0] = std::max(bb.hi[0], p[0]);
        bb.hi[1] = std::max(bb.hi[1], p[1]);
      }
      return bb;
    }
  }
  return {};
}

double Domain::volume() const {
  switch (kind_) {
    case Kind::Interval:
      return hi_[0] - lo_[0];
    case Kind::Box:
      return (hi_[0] - lo_[0]) * (hi_[1] - lo_[1]);
    case Kind::Disk:
      return M_PI * radius_ * radius_;
    case Kind::PolarGraph: {
      // 1/2 ∫ rho^2 dtheta by the composite Simpson rule
      const int n = 2048;
      double s = 0;
      for (int i = 0; i < n; ++i) {
        double t0 = 2 * M_PI * i / n, tm = 2 * M_PI * (i + 0.5) / n, t1 = 2 * M_PI * (i + 1) / n;
        auto f = [&](double t) { double r = graph_.rho(t); return 0.5 * r * r; };
        s += (f(t0) + 4 * f(tm) + f(t1)) / 6.0 * (2 * M_PI / n);
      }
      return s;
    }
  }
  return 0;
}

Domain Domain::dilate(double eps) const {
  if (eps < 0) throw SpecError("dilate requires eps >= 0");
  if (eps == 0) return *this;
  switch (kind_) {
    case Kind::Interval:
      return interval(lo_[0] - eps, hi_[0] + eps);
    case Kind::Box:
      // axis-aligned dilation (box analog of the eps-neighborhood)
      return box(lo_ - pt(eps, eps), hi_ + pt(eps, eps));
    case Kind::Disk:
      return disk(center_, radius_ + eps);
    case Kind::PolarGraph:
      throw SpecError("dilate is not supported for polar-graph domains");
  }
  throw SpecError("dilate: unknown domain kind");
}

int Domain::translate_chain_length(const Point& x0) const {
  double nx = norm2(x0);
  if (nx == 0) throw SpecError("translate_chain_length requires x0 != 0");
  auto axis_chain = [](double extent, double step) -> double {
    if (step == 0) return kInf;
    return std::ceil(extent / std::abs(step));
  };
  switch (kind_) {
    case Kind::Interval:
      return int(axis_chain(hi_[0] - lo_[0], x0[0]));
    case Kind::Box:
      return int(std::min(axis_chain(hi_[0] - lo_[0], x0[0]), axis_chain(hi_[1] - lo_[1], x0[1])));
    case Kind::Disk:
      // the chain intersection of equal disks along a line is the lens of the extremes
      return int(std::ceil(2 * radius_ / nx));
    case Kind::PolarGraph: {
      BoundingBox bb = bounding_box();
      return int(std::min(axis_chain(bb.hi[0] - bb.lo[0], x0[0]), axis_chain(bb.hi[1] - bb.lo[1], x0[1])));
    }
  }
  throw SpecError("translate_chain_length: unknown domain kind");
}

double Domain::boundary_distance(const Point& x) const {
  switch (kind_) {
    case Kind::Interval:
      return std::min(std::abs(x[0] - lo_[0]), std::abs(x[0] - hi_[0]));
    case Kind::Box: {
      double dx = std::max({lo_[0] - x[0], x[0] - hi_[0], 0.0});
      double dy = std::max({lo_[1] - x[1], x[1] - hi_[1], 0.0});
      if (dx > 0 || dy > 0) return std::hypot(dx, dy);  // outside
      double ix = std::min(x[0] - lo_[0], hi_[0] - x[0]);
      double iy = std::min(x[1] - lo_[1], hi_[1] - x[1]);
      return std::min(ix, iy);
    }
    case Kind::Disk:
      return std::abs(norm2(x - center_) - radius_);
    case Kind::PolarGraph: {
      double best = kInf;
      const int n = 512;
      double tbest = 0;
      for (int i = 0; i < n; ++i) {
        double t = 2 * M_PI * i / n;
        double d = norm2(x - graph_.boundary_point(t));
        if (d < best) { best = d; tbest = t; }
      }
      // ternary refinement around the coarse argmin
      double a = tbest - 2 * M_PI / n, b = tbest + 2 * M_PI / n;
      for (int it = 0; it < 60; ++it) {
        double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
        if (norm2(x - graph_.boundary_point(m1)) < norm2(x - graph_.boundary_point(m2))) b = m2;
        else a = m1;
      }
      return norm2(x - graph_.boundary_point(0.5 * (a + b)));
    }
  }
  return 0;
}

double Domain::max_distance_from(const Point& x) const {
  switch (kind_) {
    case Kind::Interval:
      return std::max(std::abs(lo_[0] - x[0]), std::abs(hi_[0] - x[0]));
    case Kind::Box: {
      double dx = std::max(std::abs(lo_[0] - x[0]), std::abs(hi_[0] - x[0]));
      double dy = std::max(std::abs(lo_[1] - x[1]), std::abs(hi_[1] - x[1]));
      return std::hypot(dx, dy);
    }
    case Kind::Disk:
      return norm2(center_ - x) + radius_;
    case Kind::PolarGraph: {
      double m = 0;
      for (int i = 0; i < 1024; ++i)
        m = std::max(m, norm2(graph_.boundary_point(2 * M_PI * i / 1024.0) - x));
      return m;
    }
  }
  return 0;
}

double Domain::radial_extent(const Point& x, double theta) const {
  Point e{std::cos(theta), std::sin(theta)};
  switch (kind_) {
    case Kind::Disk: {
      Point d = x - center_;
      double b = dot(d, e);
      double disc = b * b - dot(d, d) + radius_ * radius_;
      if (disc <= 0) return 0;
      return -b + std::sqrt(disc);
    }
    case Kind::Box: {
      double t = kInf;
      if (e[0] > 0) t = std::min(t, (hi_[0] - x[0]) / e[0]);
      if (e[0] < 0) t = std::min(t, (lo_[0] - x[0]) / e[0]);
      if (e[1] > 0) t = std::min(t, (hi_[1] - x[1]) / e[1]);
      if (e[1] < 0) t = std::min(t, (lo_[1] - x[1]) / e[1]);
      return std::max(t, 0.0);
    }
    default:
      throw SpecError("radial_extent: unsupported domain kind");
  }
}

C11Data Domain::c11_data() const {
  switch (kind_) {
    case Kind::Interval: {
      // charts at one endpoint must not reach the other one
      double r = 0.5 * (hi_[0] - lo_[0]);
      return {r, 0.0, hi_[0] - lo_[0]};
    }
    case Kind::Disk: {
      // chart at radius R: phi(t) = R - sqrt(R^2 - t^2) over |t| <= delta,
      // sup |phi''| = R^2 / (R^2 - delta^2)^{3/2}
      double R = radius_;
      double delta = 0.5 * R;
      double lambda = R * R / std::pow(R * R - delta * delta, 1.5);
      return {R, lambda, delta};
    }
    case Kind::PolarGraph: {
      double kmax = 0;
      for (int i = 0; i < 4096; ++i)
        kmax = std::max(kmax, std::abs(graph_.curvature(2 * M_PI * i / 4096.0)));
      if (kmax <= 0) kmax = 1e-12;
      double r = 0.95 / kmax;
      double delta = 0.25 / kmax;
      double lambda = 1.6 * kmax;
      return {r, lambda, delta};
    }
    case Kind::Box:
      throw SpecError("box domains are not C^{1,1} (corners)");
  }
  throw SpecError("c11_data: unknown domain kind");
}

Domain::BoundaryProjection Domain::nearest_boundary_point(const Point& x) const {
  C11Data c = c11_data();
  double eps = c.tube_width();
  double d = boundary_distance(x);
  if (!(d < eps))
    throw OutOfTubeError("point outside the tubular neighborhood (uniqueness not guaranteed)");
  switch (kind_) {
    case Kind::Interval: {
      bool inside = contains(x);
      double da = std::abs(x[0] - lo_[0]), db = std::abs(x[0] - hi_[0]);
      Point p = da <= db ? pt(lo_[0]) : pt(hi_[0]);
      return {p, std::min(da, db), inside};
    }
    case Kind::Disk: {
      Point rad = x - center_;
      double nr = norm2(rad);
      if (nr == 0) throw OutOfTubeError("center of the disk has no nearest boundary point");
      Point p = center_ + (radius_ / nr) * rad;
      return {p, std::abs(nr - radius_), nr < radius_};
    }
    case Kind::PolarGraph: {
      // reuse the projection search from boundary_distance
      double best = kInf;
      double tbest = 0;
      const int n = 512;
      for (int i = 0; i < n; ++i) {
        double t = 2 * M_PI * i / n;
        double dd = norm2(x - graph_.boundary_point(t));
        if (dd < best) { best = dd; tbest = t; }
      }
      double a = tbest - 2 * M_PI / n, b = tbest + 2 * M_PI / n;
      for (int it = 0; it < 60; ++it) {
        double m1 = a + (b - a) / 3, m2 = b - (b - a) / 3;
        if (norm2(x - graph_.boundary_point(m1)) < norm2(x - graph_.boundary_point(m2))) b = m2;
        else a = m1;
      }
      Point p = graph_.boundary_point(0.5 * (a + b));
      return {p, norm2(x - p), contains(x)};
    }
    case Kind::Box:
      throw SpecError("nearest_boundary_point requires a C^{1,1} domain");
  }
  throw SpecError("nearest_boundary_point: unknown domain kind");
}

// ---------------------------------------------------------------------------
// Region

Region Region::ball_complement(Point center, double radius) {
  if (radius < 0) throw SpecError("ball complement requires radius >= 0");
  Region r;
  r.kind_ = Kind::BallComplement;
  r.center_ = center;
  r.radius_ = radius;
  return r;
}

Region Region::annulus(double r1, double r2) {
  if (!(0 <= r1 && r1 <= r2)) throw SpecError("annulus requires 0 <= r1 <= r2");
  Region r;
  r.kind_ = Kind::Annulus;
  r.r1_ = r1;
  r.r2_ = r2;
  return r;
}

Region Region::complement_shifted(Domain d, Point x) {
  Region r;
  r.kind_ = Kind::ComplementShifted;
  r.domain_ = std::make_shared<Domain>(std::move(d));
  r.shift_ = x;
  return r;
}

bool Region::contains(const Point& y) const {
  switch (kind_) {
    case Kind::BallComplement:
      return norm2(y - center_) > radius_;
    case Kind::Annulus: {
      double n = norm2(y);
      return r1_ <= n && n <= r2_;
    }
    case Kind::ComplementShifted:
      return !domain_->contains(shift_ + y);
  }
  return false;
}

bool Region::contains_far_ball(double R) const {
  switch (kind_) {
    case Kind::BallComplement:
      return R >= radius_ + norm2(center_);
    case Kind::Annulus:
      return false;
    case Kind::ComplementShifted:
      return R >= domain_->max_distance_from(shift_);
  }
  return false;
}

}  // namespace nld
