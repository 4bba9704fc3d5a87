#pragma once

// Test-side oracles, independent of the assembly code paths: brute-force
// quadrature of the energy double integrals against point evaluations of the
// represented grid function.

#include <cmath>
#include <functional>
#include <vector>

#include "nld/form.hpp"
#include "nld/grid.hpp"
#include "nld/levy.hpp"

namespace oracle {

using nld::GridFunction;
using nld::LevyMeasure;
using nld::Point;
using nld::pt;

/// 1/2 ∫ (u(x) - u(x+y))^2 dx for a 1-D piecewise-constant grid function,
/// integrated exactly over the partition refined by both breakpoint sets.
inline double shift_energy_bruteforce(const GridFunction& u, double y) {
  const nld::Grid& g = *u.grid;
  std::vector<double> brk;
  double lo = g.origin[0] - 2 * g.h - std::abs(y);
  double hi = g.origin[0] + (g.shape[0] + 2) * g.h + std::abs(y);
  for (int i = -2; i <= g.shape[0] + 2; ++i) {
    brk.push_back(g.origin[0] + i * g.h);
    brk.push_back(g.origin[0] + i * g.h - y);
  }
  brk.push_back(lo);
  brk.push_back(hi);
  std::sort(brk.begin(), brk.end());
  double acc = 0;
  for (std::size_t k = 0; k + 1 < brk.size(); ++k) {
    double a = brk[k], b = brk[k + 1];
    if (b <= a) continue;
    double x = 0.5 * (a + b);
    double d = u.eval(pt(x)) - u.eval(pt(x + y));
    acc += d * d * (b - a);
  }
  return 0.5 * acc;
}

/// Closed-form pair weight of the 1-D half-stable kernel amp * |t|^{-3/2} over
/// two disjoint (possibly touching) windows [a1,b1] x [a2,b2], b1 <= a2:
/// iint amp |x-y|^{-3/2} = 4 amp (sqrt(a2-a1) - sqrt(a2-b1) - sqrt(b2-a1) + sqrt(b2-b1)).
inline double halfstable_window_weight(double amp, double a1, double b1, double a2, double b2) {
  auto s = [](double t) { return std::sqrt(std::max(t, 0.0)); };
  return 4 * amp * (s(a2 - a1) - s(a2 - b1) - s(b2 - a1) + s(b2 - b1));
}

/// Exact iint_{D x D} (u(x)-u(y))^2 amp |x-y|^{-3/2} dx dy (ordered pairs) for
/// a piecewise-constant u, D the union of the mask's cells.
inline double halfstable_pair_energy(const GridFunction& u, double amp,
                                     const std::vector<uint8_t>& mask) {
  const nld::Grid& g = *u.grid;
  double total = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask[i]) continue;
    double ai = g.origin[0] + double(i) * g.h, bi = ai + g.h;
    for (std::size_t j = 0; j < g.size(); ++j) {
      if (!mask[j] || i == j) continue;
      double d = u.coeffs[i] - u.coeffs[j];
      if (d == 0) continue;
      double aj = g.origin[0] + double(j) * g.h, bj = aj + g.h;
      double w = i < j ? halfstable_window_weight(amp, ai, bi, aj, bj)
                       : halfstable_window_weight(amp, aj, bj, ai, bi);
      total += d * d * w;
    }
  }
  return total;
}

/// Exact cell integral of the exterior mass of the half-stable kernel:
/// ∫_a^b nu({y : x + y outside [lo, hi]}) dx for [a,b] inside [lo,hi].
inline double halfstable_beyond_cell(double amp, double lo, double hi, double a, double b) {
  auto s = [](double t) { return std::sqrt(std::max(t, 0.0)); };
  return 4 * amp * (s(b - lo) - s(a - lo) + s(hi - a) - s(hi - b));
}

/// <u,u>_nu for a 1-D atomic measure by brute force over the atoms.
inline double atomic_form_bruteforce(const LevyMeasure& nu, const GridFunction& u) {
  double total = 0;
  nu.for_each_component([&](const LevyMeasure& c) {
    for (const auto& p : c.atom_pairs()) total += 2 * p.weight * shift_energy_bruteforce(u, p.y[0]);
    // far atoms shift the support entirely off itself: exact L2 of the steps
    double l2 = 0;
    const nld::Grid& g = *u.grid;
    for (std::size_t i = 0; i < g.size(); ++i) l2 += u.coeffs[i] * u.coeffs[i] * g.h;
    total += c.far_tail().mass * l2;
  });
  return total;
}

/// Direct double integral ∫∫_{A x B} (u(x) - u(y))^2 V(|x-y|) dx dy over two
/// 1-D windows by composite midpoint sampling (ordered pairs). The grid
/// function is piecewise constant, so the integrand vanishes near the
/// diagonal within a cell and midpoint sampling converges.
inline double pair_energy_bruteforce(const GridFunction& u,
                                     const std::function<double(double)>& V, double a1, double b1,
                                     double a2, double b2, int n = 4000) {
  double dx = (b1 - a1) / n, dy = (b2 - a2) / n;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    double x = a1 + (i + 0.5) * dx;
    double ux = u.eval(pt(x));
    for (int j = 0; j < n; ++j) {
      double y = a2 + (j + 0.5) * dy;
      double t = std::abs(x - y);
      if (t == 0) continue;
      double d = ux - u.eval(pt(y));
      if (d != 0) acc += d * d * V(t);
    }
  }
  return acc * dx * dy;
}

}  // namespace oracle
