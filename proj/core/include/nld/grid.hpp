#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "nld/geometry.hpp"

namespace nld {

class LevyMeasure;

/// Discretization basis on the uniform lattice: piecewise-constant cell
/// indicators (P0) or continuous piecewise-(multi)linear nodal hats (P1).
enum class Basis { P0, P1 };

/// Uniform axis-aligned lattice covering Omega plus a truncation halo of
/// radius r_trunc. Degrees of freedom are cells (P0) or nodes (P1); the
/// lattice is anchored at integer multiples of h so that lattice-aligned
/// domains and atoms hit lattice points exactly.
struct Grid {
  int dim = 1;
  double h = 0;
  Basis basis = Basis::P0;
  double r_trunc = 0;
  std::array<double, 2> origin{0, 0};  // P0 cell i spans origin + [i,i+1]h; P1 node i at origin + i*h
  std::array<int, 2> shape{1, 1};      // dof counts per axis (shape[1] = 1 in 1-D)
  std::shared_ptr<const Domain> domain;
  std::vector<uint8_t> interior;       // 1 = dof in Omega, 0 = halo

  std::size_t size() const { return std::size_t(shape[0]) * std::size_t(shape[1]); }
  std::size_t flat(int i, int j) const { return std::size_t(i) + std::size_t(shape[0]) * std::size_t(j); }
  std::array<int, 2> unflat(std::size_t f) const {
    return {int(f % std::size_t(shape[0])), int(f / std::size_t(shape[0]))};
  }
  /// Coordinate of dof f: cell center for P0, node for P1.
  Point coord(std::size_t f) const {
    auto ij = unflat(f);
    double off = basis == Basis::P0 ? 0.5 : 0.0;
    return {origin[0] + (ij[0] + off) * h, dim == 2 ? origin[1] + (ij[1] + off) * h : 0.0};
  }
  std::size_t interior_count() const;
  /// Axis extent of the dof bounding box in physical units.
  double extent(int axis) const { return shape[axis] * h; }
  /// Euclidean diameter of the lattice bounding box (pairs farther apart than
  /// this can never both carry dofs).
  double lattice_diameter() const;
  /// Support half-width of the basis autocorrelation in cells (1 for P0, 2 for P1).
  int stencil_halfwidth() const { return basis == Basis::P0 ? 1 : 2; }
};

/// Coefficients of a function on the truncated lattice.
struct GridFunction {
  std::shared_ptr<const Grid> grid;
  Eigen::VectorXd coeffs;

  static GridFunction zero(std::shared_ptr<const Grid> g);
  static GridFunction constant(std::shared_ptr<const Grid> g, double value);
  /// Sample f at dof coordinates.
  static GridFunction sample(std::shared_ptr<const Grid> g, const std::function<double(Point)>& f);
  /// Sample f at interior dofs only (zero on the halo).
  static GridFunction sample_interior(std::shared_ptr<const Grid> g,
                                      const std::function<double(Point)>& f);
  /// Sample f at halo dofs only (zero inside).
  static GridFunction sample_halo(std::shared_ptr<const Grid> g,
                                  const std::function<double(Point)>& f);

  /// True if all halo coefficients vanish (discrete membership in H_nu^Omega).
  bool interior_supported(double tol = 0.0) const;
  /// Pointwise evaluation of the represented function (P0: cell value, P1:
  /// multilinear interpolation); zero outside the lattice.
  double eval(const Point& x) const;
};

/// Build a grid for Omega with cell size h and halo radius r_trunc. If a
/// measure is supplied, P0 admissibility is enforced: indicators belong to
/// H_nu only when the measure has integrable small jumps or finite mass.
Grid make_grid(std::shared_ptr<const Domain> domain, double h, double r_trunc, Basis basis,
               const LevyMeasure* measure = nullptr);

}  // namespace nld
