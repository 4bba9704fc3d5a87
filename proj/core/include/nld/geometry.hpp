#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "nld/errors.hpp"

namespace nld {

/// Points live in R^1 or R^2; the second coordinate is zero in 1-D.
using Point = std::array<double, 2>;

inline Point pt(double x, double y = 0.0) { return {x, y}; }
inline Point operator+(Point a, Point b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Point operator-(Point a, Point b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Point operator-(Point a) { return {-a[0], -a[1]}; }
inline Point operator*(double s, Point a) { return {s * a[0], s * a[1]}; }
inline double dot(Point a, Point b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm2(Point a) { return std::sqrt(dot(a, a)); }

struct BoundingBox {
  Point lo{0, 0};
  Point hi{0, 0};
};

/// Smooth C^{1,1} boundary given as a polar graph rho(theta) > 0 around the origin,
/// rho(theta) = base + sum_k (a_k cos k theta + b_k sin k theta).
struct PolarGraph {
  double base = 1.0;
  std::vector<std::array<double, 2>> fourier;  // [k-1] = {a_k, b_k}

  double rho(double theta) const;
  double drho(double theta) const;
  double ddrho(double theta) const;
  Point boundary_point(double theta) const;
  /// Signed curvature of the boundary curve at angle theta.
  double curvature(double theta) const;
};

/// Data of the C^{1,1} structure: ball scale r, Lipschitz-gradient constant lambda
/// of the boundary charts, chart radius delta.
struct C11Data {
  double r = 0;
  double lambda = 0;
  double delta = 0;
  /// Tube half-width eps* = r ∧ 1/(6 lambda) ∧ delta/3.
  double tube_width() const {
    double e = r;
    if (lambda > 0) e = std::min(e, 1.0 / (6.0 * lambda));
    e = std::min(e, delta / 3.0);
    return e;
  }
};

/// A nonempty bounded open set in R^n, n in {1,2}.
class Domain {
 public:
  enum class Kind { Interval, Box, Disk, PolarGraph };

  static Domain interval(double a, double b);
  static Domain box(Point lo, Point hi);          // 2-D axis-aligned box
  static Domain disk(Point center, double radius);
  static Domain polar_graph(PolarGraph g);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool contains(const Point& x) const;            // open-set membership
  double diameter() const;
  BoundingBox bounding_box() const;
  double volume() const;

  /// Open eps-neighborhood {x : dist(x, Omega) < eps} ∪ Omega. eps = 0 returns Omega.
  Domain dilate(double eps) const;

  /// Least n with Omega ∩ (Omega+x0) ∩ ... ∩ (Omega+n*x0) = empty; exact for
  /// Interval/Box/Disk, certified bounding-box upper bound otherwise.
  int translate_chain_length(const Point& x0) const;

  /// Distance from x to the boundary (nonnegative; 0 on the boundary).
  double boundary_distance(const Point& x) const;

  /// sup_{z in Omega} |z - x|, used to certify far-tail coverage of complements.
  double max_distance_from(const Point& x) const;

  /// Radial function of the domain seen from an interior point x: largest t with
  /// x + t*e(theta) in Omega. Domains here are star-shaped from interior points
  /// of Interval/Box/Disk. (2-D only.)
  double radial_extent(const Point& x, double theta) const;

  // accessors for the concrete shapes
  double a() const { return lo_[0]; }
  double b() const { return hi_[0]; }
  Point box_lo() const { return lo_; }
  Point box_hi() const { return hi_; }
  Point center() const { return center_; }
  double radius() const { return radius_; }
  const PolarGraph& graph() const { return graph_; }

  /// C^{1,1} data (ball scale, chart Lipschitz constant, chart radius).
  /// Derived from the shape; SpecError if the shape is not C^{1,1} at a usable scale.
  C11Data c11_data() const;

  /// Nearest boundary point for x in the tube {dist(x, dOmega) < tube}; returns the
  /// foot point p, the distance d = |x-p| and whether x lies inside Omega.
  struct BoundaryProjection {
    Point p;
    double d;
    bool inside;
  };
  BoundaryProjection nearest_boundary_point(const Point& x) const;

 private:
  Kind kind_ = Kind::Interval;
  int dim_ = 1;
  Point lo_{0, 0}, hi_{0, 0};   // Interval / Box
  Point center_{0, 0};          // Disk
  double radius_ = 0;           // Disk
  PolarGraph graph_;            // PolarGraph
};

/// Borel region used by tail-mass queries: a ball complement, an origin-centered
/// closed annulus, or the complement of a (possibly dilated) domain shifted by x:
/// {y : x + y not in D}.
class Region {
 public:
  enum class Kind { BallComplement, Annulus, ComplementShifted };

  static Region ball_complement(Point center, double radius);
  static Region annulus(double r1, double r2);
  static Region complement_shifted(Domain d, Point x);

  Kind kind() const { return kind_; }
  int dim(int measure_dim) const { return kind_ == Kind::ComplementShifted ? domain_->dim() : measure_dim; }
  bool contains(const Point& y) const;

  /// True if {|y| > R} is contained in the region (certified), enabling exact
  /// far-tail accounting for truncated atomic series.
  bool contains_far_ball(double R) const;

  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  double r1() const { return r1_; }
  double r2() const { return r2_; }
  const Domain& domain() const { return *domain_; }
  const Point& shift() const { return shift_; }

 private:
  Kind kind_ = Kind::Annulus;
  Point center_{0, 0}, shift_{0, 0};
  double radius_ = 0, r1_ = 0, r2_ = 0;
  std::shared_ptr<const Domain> domain_;
};

}  // namespace nld
