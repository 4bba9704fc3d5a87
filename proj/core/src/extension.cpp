#include "nld/extension.hpp"

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

double uniform01(uint64_t& s) {
  s = splitmix64(s);
  return double(s >> 11) * 0x1.0p-53;
}

double smoothstep_down(double s) {
  if (s <= 0) return 1;
  if (s >= 1) return 0;
  double t = 1 - s;
  return t * t * t * (10 - 15 * t + 6 * t * t);
}

/// Uniform sample in the tube of the map (rejection from the padded bounding box).
Point sample_tube(const ReflectionMap& map, uint64_t& state) {
  BoundingBox bb = map.domain().bounding_box();
  double pad = map.tube_width();
  for (int guard = 0; guard < 100000; ++guard) {
    Point p{bb.lo[0] - pad + uniform01(state) * (bb.hi[0] - bb.lo[0] + 2 * pad),
            map.domain().dim() == 2
                ? bb.lo[1] - pad + uniform01(state) * (bb.hi[1] - bb.lo[1] + 2 * pad)
                : 0.0};
    if (map.in_tube(p)) return p;
  }
  throw SpecError("tube sampling failed (degenerate tube?)");
}

}  // namespace

ReflectionMap::ReflectionMap(std::shared_ptr<const Domain> domain) : domain_(std::move(domain)) {
  c11_ = domain_->c11_data();
  tube_ = c11_.tube_width();
  if (!(tube_ > 0)) throw SpecError("C^{1,1} data yields an empty tube");
}

bool ReflectionMap::in_tube(const Point& x) const {
  return domain_->boundary_distance(x) < tube_;
}

Point ReflectionMap::reflect(const Point& x) const {
  auto proj = domain_->nearest_boundary_point(x);  // throws OutOfTubeError outside V
  return 2.0 * proj.p - x;
}

LipschitzProbe lipschitz_probe(const ReflectionMap& map, int n_pairs, uint64_t seed) {
  LipschitzProbe out;
  uint64_t state = splitmix64(seed);
  for (int k = 0; k < n_pairs; ++k) {
    Point x = sample_tube(map, state);
    Point y = sample_tube(map, state);
    double d = norm2(x - y);
    if (d == 0) continue;
    double dt = norm2(map.reflect(x) - map.reflect(y));
    if (dt == 0) continue;
    out.expansion = std::max(out.expansion, dt / d);
    out.contraction = std::max(out.contraction, d / dt);
    ++out.pairs;
  }
  out.alpha_hat = std::max({out.expansion, out.contraction, 1.0});
  return out;
}

DistortionProbe measure_distortion_probe(const ReflectionMap& map, int n_boxes, uint64_t seed) {
  DistortionProbe out;
  uint64_t state = splitmix64(seed ^ 0xd15707ULL);
  const int dim = map.domain().dim();
  const double side = map.tube_width() / 8;
  const int mc = 4096;
  for (int b = 0; b < n_boxes; ++b) {
    Point c = sample_tube(map, state);
    // keep the whole box in the tube
    bool ok = true;
    for (int corner = 0; corner < (1 << dim); ++corner) {
      Point p = c;
      p[0] += (corner & 1 ? 0.5 : -0.5) * side;
      if (dim == 2) p[1] += (corner & 2 ? 0.5 : -0.5) * side;
      ok = ok && map.in_tube(p);
    }
    if (!ok) {
      ++out.skipped;
      continue;
    }
    double volK = dim == 1 ? side : side * side;
    // bounding box of T[K] from the reflected corners, padded
    Point tlo{1e300, 1e300}, thi{-1e300, -1e300};
    for (int corner = 0; corner < (1 << dim); ++corner) {
      Point p = c;
      p[0] += (corner & 1 ? 0.5 : -0.5) * side;
      if (dim == 2) p[1] += (corner & 2 ? 0.5 : -0.5) * side;
      Point tp = map.reflect(p);
      for (int a = 0; a < dim; ++a) {
        tlo[a] = std::min(tlo[a], tp[a]);
        thi[a] = std::max(thi[a], tp[a]);
      }
    }
    double padf = 0.5 * side;
    for (int a = 0; a < dim; ++a) {
      tlo[a] -= padf;
      thi[a] += padf;
    }
    double volBB = (thi[0] - tlo[0]) * (dim == 2 ? (thi[1] - tlo[1]) : 1.0);
    int hits = 0;
    for (int m = 0; m < mc; ++m) {
      Point z{tlo[0] + uniform01(state) * (thi[0] - tlo[0]),
              dim == 2 ? tlo[1] + uniform01(state) * (thi[1] - tlo[1]) : 0.0};
      if (!map.in_tube(z)) continue;
      Point tz = map.reflect(z);
      bool ink = std::abs(tz[0] - c[0]) <= 0.5 * side &&
                 (dim == 1 || std::abs(tz[1] - c[1]) <= 0.5 * side);
      hits += ink;
    }
    double volTK = volBB * double(hits) / mc;
    if (volTK <= 0) {
      ++out.skipped;
      continue;
    }
    out.max_ratio = std::max(out.max_ratio, volTK / volK);
    out.max_inv_ratio = std::max(out.max_inv_ratio, volK / volTK);
    ++out.boxes;
  }
  return out;
}

ScalingCheck kernel_scaling_check(const RadialKernel& kernel, double alpha_hat, int n_samples,
                                  uint64_t seed, double cap) {
  ScalingCheck out;
  out.beta_lo = std::min(1.0 / alpha_hat, 1.0 / 3.0);
  out.beta_hi = std::max(alpha_hat, 1.0);
  uint64_t state = splitmix64(seed ^ 0x5ca1eULL);

  std::vector<double> radii;
  for (int k = 0; k < n_samples; ++k) {
    // log-uniform radii over a broad range
    double t = std::exp(std::log(1e-3) + uniform01(state) * (std::log(1e3) - std::log(1e-3)));
    radii.push_back(t);
  }
  double sr = kernel.support_radius();
  if (std::isfinite(sr)) {
    // deterministic probes straddling the support edge
    for (double f : {0.9, 0.99, 1.0001, 1.01, 1.5, 2.0}) radii.push_back(sr * f);
  }
  if (kernel.inner_cut() > 0) {
    for (double f : {0.5, 0.9, 1.0001, 1.5}) radii.push_back(kernel.inner_cut() * f);
  }

  const int nb = 33;
  for (double t : radii) {
    for (int i = 0; i < nb; ++i) {
      double beta = out.beta_lo + (out.beta_hi - out.beta_lo) * i / (nb - 1);
      double vt = kernel.density(t);
      double vbt = kernel.density(beta * t);
      if (vbt == 0) continue;
      if (vt == 0) {
        out.c_alpha = std::numeric_limits<double>::infinity();
        out.pass = false;
        return out;
      }
      out.c_alpha = std::max(out.c_alpha, vbt / vt);
    }
  }
  out.pass = std::isfinite(out.c_alpha) && out.c_alpha <= cap;
  return out;
}

CutoffResult build_cutoff(const ReflectionMap& map, std::shared_ptr<const Grid> grid) {
  const Grid& g = *grid;
  double tube = map.tube_width();
  if (tube < 2 * g.h)
    throw SpecError("tube narrower than two grid cells; refine h to resolve the cutoff");
  CutoffResult out;
  out.phi = GridFunction::sample(grid, [&](Point x) {
    if (!map.domain().contains(x)) return 1.0;
    double d = map.domain().boundary_distance(x);
    return smoothstep_down(d / tube);
  });
  double worst = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.interior[i]) continue;
    double d = map.domain().boundary_distance(g.coord(i));
    if (d <= 0) continue;
    worst = std::max(worst, (1.0 - out.phi.coeffs[i]) / d);
  }
  out.linear_bound = worst;
  return out;
}

ExtensionResult extend(const GridFunction& gdata, const ReflectionMap& map,
                       const CutoffResult& cutoff, const FormMatrix& fm,
                       const ScalingCheck& scaling) {
  if (!scaling.pass)
    throw SpecError("kernel inadmissible for the reflection extension (scaling check failed)");
  const Grid& g = *fm.grid;
  if (!gdata.coeffs.allFinite()) throw SpecError("exterior data must be finite");

  std::vector<uint8_t> halo(g.size()), inter(g.size()), wmask(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    inter[i] = g.interior[i];
    halo[i] = !g.interior[i];
  }

  // Exterior data lives on halo dofs. A reflected tube point lies outside
  // Omega but can land in a boundary-straddling cell whose dof is classified
  // interior; read the nearest exterior dof instead.
  auto exterior_value = [&](Point p) -> double {
    double off = g.basis == Basis::P0 ? 0.5 : 0.0;
    int c0 = int(std::lround((p[0] - g.origin[0]) / g.h - off));
    int c1 = g.dim == 2 ? int(std::lround((p[1] - g.origin[1]) / g.h - off)) : 0;
    double best = 1e300, val = 0;
    for (int d1 = -4; d1 <= 4; ++d1) {
      if (g.dim == 1 && d1 != 0) continue;
      for (int d0 = -4; d0 <= 4; ++d0) {
        int i0 = c0 + d0, i1 = c1 + d1;
        if (i0 < 0 || i0 >= g.shape[0] || i1 < 0 || i1 >= g.shape[1]) continue;
        std::size_t f = g.flat(i0, i1);
        if (g.interior[f]) continue;
        Point q = g.coord(f);
        double d = dot(p - q, p - q);
        if (d < best) {
          best = d;
          val = gdata.coeffs[f];
        }
      }
    }
    return val;
  };

  ExtensionResult out;
  out.g_ext = GridFunction::zero(fm.grid);
  std::vector<double> gT(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point x = g.coord(i);
    if (!g.interior[i]) {
      out.g_ext.coeffs[i] = gdata.coeffs[i];
      continue;
    }
    if (map.in_tube(x)) {
      wmask[i] = 1;
      gT[i] = exterior_value(map.reflect(x));
      out.g_ext.coeffs[i] = gT[i] * cutoff.phi.coeffs[i];
    }
  }

  // input norm: truncated-grid H(Omega^c) with the L^2 part
  double l2_ext = fm.mass_quadratic_masked(gdata, halo);
  double semi_ext = fm.pair_sum(gdata, halo, halo);
  out.input_norm = std::sqrt(l2_ext + semi_ext);
  if (out.input_norm == 0) {
    out.ratio = 0;
    return out;
  }
  if (!std::isfinite(semi_ext)) throw SpecError("exterior data has infinite truncated energy");

  out.output_norm = grid_norm(fm, out.g_ext, NormSpace::HFull);
  out.ratio = out.output_norm / out.input_norm;

  out.block_exterior = fm.pair_sum(out.g_ext, halo, halo);
  out.block_a_prime = fm.pair_sum(out.g_ext, halo, inter);
  out.block_a = fm.pair_sum(out.g_ext, inter, halo);
  out.block_b = fm.pair_sum(out.g_ext, inter, inter);

  // majorant sub-blocks of the continuity estimate: weighted restricted sums
  const auto& pw = fm.pair_weights.entries();
  const auto& phi = cutoff.phi.coeffs;
  auto weighted = [&](const std::vector<uint8_t>& A, const std::vector<uint8_t>& B,
                      const std::function<double(std::size_t, std::size_t)>& f2) {
    double total = 0;
    const int s0 = g.shape[0], s1 = g.shape[1];
    for (const auto& e : pw) {
      if (e.lag[0] == 0 && e.lag[1] == 0) continue;
      const int m0 = e.lag[0], m1 = e.lag[1];
      const int i1lo = std::max(0, -m1), i1hi = s1 - std::max(0, m1);
      const int i0lo = std::max(0, -m0), i0hi = s0 - std::max(0, m0);
      double acc = 0;
      for (int i1 = i1lo; i1 < i1hi; ++i1) {
        for (int i0 = i0lo; i0 < i0hi; ++i0) {
          std::size_t i = g.flat(i0, i1);
          std::size_t j = g.flat(i0 + m0, i1 + m1);
          if (A[i] && B[j]) acc += f2(i, j);
        }
      }
      total += e.value * acc;
    }
    return total;
  };

  const auto& gd = gdata.coeffs;
  out.a11 = 2.0 * weighted(wmask, halo, [&](std::size_t i, std::size_t j) {
    double q = gd[j] * (1.0 - phi[i]);
    return q * q;
  });
  out.a12 = 2.0 * weighted(wmask, halo, [&](std::size_t i, std::size_t j) {
    double q = (gT[i] - gd[j]) * phi[i];
    return q * q;
  });
  std::vector<uint8_t> deep(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) deep[i] = inter[i] && !wmask[i];
  out.a2 = weighted(deep, halo, [&](std::size_t, std::size_t j) { return gd[j] * gd[j]; });
  out.b11 = 2.0 * weighted(wmask, wmask, [&](std::size_t i, std::size_t j) {
    double q = gT[i] * (phi[i] - phi[j]);
    return q * q;
  });
  out.b12 = 2.0 * weighted(wmask, wmask, [&](std::size_t i, std::size_t j) {
    double q = gT[i] - gT[j];
    return q * q * phi[j];
  });
  out.b2 = 2.0 * weighted(wmask, deep, [&](std::size_t i, std::size_t) {
    double q = gT[i] * phi[i];
    return q * q;
  });
  return out;
}

}  // namespace nld
