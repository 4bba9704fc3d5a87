#include "nld/grid.hpp"

#include <cmath>

#include "nld/errors.hpp"
#include "nld/levy.hpp"

namespace nld {

std::size_t Grid::interior_count() const {
  std::size_t n = 0;
  for (uint8_t m : interior) n += m;
  return n;
}

double Grid::lattice_diameter() const {
  // diameter of the union of basis supports
  int pad = basis == Basis::P0 ? 0 : 2;  // P1 hats reach one cell beyond the end nodes
  double ex = (shape[0] + pad) * h;
  double ey = dim == 2 ? (shape[1] + pad) * h : 0.0;
  return std::hypot(ex, ey);
}

Grid make_grid(std::shared_ptr<const Domain> domain, double h, double r_trunc, Basis basis,
               const LevyMeasure* measure) {
  if (!(h > 0)) throw SpecError("grid requires h > 0");
  if (r_trunc < 0) throw SpecError("grid requires r_trunc >= 0");
  if (measure && basis == Basis::P0 && !measure->small_jump_integrable() && !measure->finite_mass())
    throw AdmissibilityError(
        "P0 basis inadmissible: indicators have infinite energy for this measure; use P1");

  Grid g;
  g.dim = domain->dim();
  g.h = h;
  g.basis = basis;
  g.r_trunc = r_trunc;
  g.domain = std::move(domain);

  BoundingBox bb = g.domain->bounding_box();
  for (int k = 0; k < g.dim; ++k) {
    double lo = bb.lo[k] - r_trunc;
    double hi = bb.hi[k] + r_trunc;
    // anchor the lattice at integer multiples of h so lattice-aligned geometry is exact
    double o = std::floor(lo / h + 1e-12) * h;
    int count;
    if (basis == Basis::P0) {
      count = int(std::ceil((hi - o) / h - 1e-12));
    } else {
      count = int(std::ceil((hi - o) / h - 1e-12)) + 1;
    }
    g.origin[k] = o;
    g.shape[k] = std::max(count, 1);
  }
  if (g.dim == 1) {
    g.origin[1] = 0;
    g.shape[1] = 1;
  }
  if (g.size() > std::size_t(8) * 1024 * 1024)
    throw SpecError("grid too large (" + std::to_string(g.size()) + " dofs)");

  g.interior.resize(g.size());
  std::size_t n_int = 0;
  for (std::size_t f = 0; f < g.size(); ++f) {
    bool in = g.domain->contains(g.coord(f));
    g.interior[f] = in;
    n_int += in;
  }
  if (n_int == 0) throw SpecError("grid has no interior dofs; refine h");
  return g;
}

GridFunction GridFunction::zero(std::shared_ptr<const Grid> g) {
  GridFunction u;
  u.coeffs = Eigen::VectorXd::Zero(g->size());
  u.grid = std::move(g);
  return u;
}

GridFunction GridFunction::constant(std::shared_ptr<const Grid> g, double value) {
  GridFunction u;
  u.coeffs = Eigen::VectorXd::Constant(g->size(), value);
  u.grid = std::move(g);
  return u;
}

GridFunction GridFunction::sample(std::shared_ptr<const Grid> g,
                                  const std::function<double(Point)>& f) {
  GridFunction u = zero(g);
  for (std::size_t i = 0; i < g->size(); ++i) u.coeffs[i] = f(g->coord(i));
  return u;
}

GridFunction GridFunction::sample_interior(std::shared_ptr<const Grid> g,
                                           const std::function<double(Point)>& f) {
  GridFunction u = zero(g);
  for (std::size_t i = 0; i < g->size(); ++i)
    if (g->interior[i]) u.coeffs[i] = f(g->coord(i));
  return u;
}

GridFunction GridFunction::sample_halo(std::shared_ptr<const Grid> g,
                                       const std::function<double(Point)>& f) {
  GridFunction u = zero(g);
  for (std::size_t i = 0; i < g->size(); ++i)
    if (!g->interior[i]) u.coeffs[i] = f(g->coord(i));
  return u;
}

bool GridFunction::interior_supported(double tol) const {
  for (std::size_t i = 0; i < grid->size(); ++i)
    if (!grid->interior[i] && std::abs(coeffs[i]) > tol) return false;
  return true;
}

double GridFunction::eval(const Point& x) const {
  const Grid& g = *grid;
  if (g.basis == Basis::P0) {
    int idx[2] = {0, 0};
    for (int k = 0; k < g.dim; ++k) {
      double s = (x[k] - g.origin[k]) / g.h;
      int i = int(std::floor(s));
      if (i < 0 || i >= g.shape[k]) return 0;
      idx[k] = i;
    }
    return coeffs[g.flat(idx[0], idx[1])];
  }
  // P1: multilinear interpolation between nodes, zero outside the node box
  double sx = (x[0] - g.origin[0]) / g.h;
  int i0 = int(std::floor(sx));
  double fx = sx - i0;
  auto node = [&](int i, int j) -> double {
    if (i < 0 || i >= g.shape[0]) return 0;
    if (g.dim == 2 && (j < 0 || j >= g.shape[1])) return 0;
    return coeffs[g.flat(i, g.dim == 2 ? j : 0)];
  };
  if (g.dim == 1) {
    if (sx < -1 || sx > g.shape[0]) return 0;
    return node(i0, 0) * (1 - fx) + node(i0 + 1, 0) * fx;
  }
  double sy = (x[1] - g.origin[1]) / g.h;
  int j0 = int(std::floor(sy));
  double fy = sy - j0;
  return node(i0, j0) * (1 - fx) * (1 - fy) + node(i0 + 1, j0) * fx * (1 - fy) +
         node(i0, j0 + 1) * (1 - fx) * fy + node(i0 + 1, j0 + 1) * fx * fy;
}

}  // namespace nld
