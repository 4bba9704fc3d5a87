#pragma once

#include <cstdint>
#include <functional>
#include <memory>

#include "nld/form.hpp"
#include "nld/grid.hpp"
#include "nld/levy.hpp"

namespace nld {

/// Boundary reflection in the tubular neighborhood V of a C^{1,1} domain:
/// T x = 2 p(x) - x with p(x) the unique nearest boundary point. T is an
/// involution that swaps the interior and exterior sides of the tube and
/// fixes the boundary.
class ReflectionMap {
 public:
  explicit ReflectionMap(std::shared_ptr<const Domain> domain);

  const Domain& domain() const { return *domain_; }
  const C11Data& c11() const { return c11_; }
  double tube_width() const { return tube_; }
  bool in_tube(const Point& x) const;
  Point reflect(const Point& x) const;  // OutOfTubeError outside V

 private:
  std::shared_ptr<const Domain> domain_;
  C11Data c11_;
  double tube_;
};

struct LipschitzProbe {
  double expansion = 0;    // max |Tx - Ty| / |x - y|
  double contraction = 0;  // max |x - y| / |Tx - Ty|
  double alpha_hat = 0;    // the empirical bi-Lipschitz constant (max of both)
  int pairs = 0;
};
LipschitzProbe lipschitz_probe(const ReflectionMap& map, int n_pairs, uint64_t seed);

struct DistortionProbe {
  double max_ratio = 0;      // max vol(T[K]) / vol(K)
  double max_inv_ratio = 0;  // max vol(K) / vol(T[K])
  int boxes = 0;
  int skipped = 0;  // degenerate boxes (zero sampled volume)
};
/// Monte Carlo volume comparison of small boxes K in the tube against their
/// images T[K] (membership via the involution: z in T[K] iff Tz in K).
DistortionProbe measure_distortion_probe(const ReflectionMap& map, int n_boxes, uint64_t seed);

struct ScalingCheck {
  double c_alpha = 0;  // sup V(beta t) / V(t) over the sampled (beta, t)
  double beta_lo = 0, beta_hi = 0;
  bool pass = false;
};
/// Doubling-type check for the kernel profile: V(beta t) <= C_alpha V(t) for
/// beta in [alpha_hat^{-1} ∧ 1/3, alpha_hat]. Kernels with hard support edges
/// fail (the ratio is infinite where the denominator vanishes).
ScalingCheck kernel_scaling_check(const RadialKernel& kernel, double alpha_hat, int n_samples,
                                  uint64_t seed, double cap = 1e8);

struct CutoffResult {
  GridFunction phi;
  double linear_bound = 0;  // max over interior samples of (1 - phi(x)) / dist(x, Omega^c)
};
/// Smooth cutoff in the normal coordinate: phi = 1 on Omega^c, a C^2
/// polynomial step across W = V ∩ Omega, 0 on Omega \ W. Errors out when the
/// tube is thinner than two grid cells.
CutoffResult build_cutoff(const ReflectionMap& map, std::shared_ptr<const Grid> grid);

struct ExtensionResult {
  GridFunction g_ext;
  double input_norm = 0;   // ||g||_{H_nu(Omega^c)} on the truncated grid
  double output_norm = 0;  // ||g_ext||_{H_nu(R^n)} on the truncated grid
  double ratio = 0;        // output / input (0 for g = 0)
  // block decomposition of the output double integral (ordered pairs)
  double block_exterior = 0;  // Omega^c x Omega^c
  double block_a_prime = 0;   // Omega^c x Omega
  double block_a = 0;         // Omega x Omega^c (equals block_a_prime)
  double block_b = 0;         // Omega x Omega
  // majorant sub-blocks mirroring the continuity estimate
  double a11 = 0, a12 = 0, a2 = 0, b11 = 0, b12 = 0, b2 = 0;
};

/// Reflection extension: g_ext = g on Omega^c, g(Tx) phi(x) on W, 0 on
/// Omega \ W. Requires exterior data with finite truncated-grid energy and a
/// kernel that passes the scaling check.
ExtensionResult extend(const GridFunction& g, const ReflectionMap& map, const CutoffResult& cutoff,
                       const FormMatrix& fm, const ScalingCheck& scaling);

}  // namespace nld
