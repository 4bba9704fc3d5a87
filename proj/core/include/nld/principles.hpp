#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nld/form.hpp"
#include "nld/solve.hpp"

namespace nld {

struct PoincareEstimate {
  double spectral_constant = 0;      // 1 / lambda_min of (K_int, M_int)
  double constructive_constant = 0;  // translate-chain bound / nu(annulus)
  double lambda_min = 0;
  double annulus_r1 = 0, annulus_r2 = 0;
  int chain_length = 0;
  int iterations = 0;
};

/// Smallest generalized Rayleigh quotient of the interior stiffness block
/// against the mass, by inverse power iteration (matrix-free inner CG).
PoincareEstimate poincare_spectral(const FormMatrix& fm, double tol = 1e-9, int max_iter = 10000);

/// Constructive bound: select a dyadic annulus carrying measure mass, run the
/// translate-chain argument for representative shifts in it (every atom for
/// atomic measures, sampled directions at the inner radius for densities), and
/// divide the resulting chain constant by the annulus mass.
///
/// The chain recurrence used: step multipliers C_k = C_{k-1} + 4 c_{k-1},
/// c_k = 2 c_{k-1} starting at (C_1, c_1) = (2, 1), so that after the
/// intersection empties at step n,
///   ||u||^2_{L^2} <= (2 + 2 C_n) <u,u>_{delta_y} = (2^{n+2} - 2) <u,u>_{delta_y}.
PoincareEstimate poincare_constructive(const LevyMeasure& nu, const Domain& omega);

struct MaxPrincipleVerdict {
  bool pass = false;
  double min_value = 0;
  Point location{0, 0};
};

/// f >= 0 and g >= 0 imply u >= 0: checks min u >= -tol over all dofs.
MaxPrincipleVerdict check_weak_max_principle(const SolveReport& rep, double tol = 1e-10);

/// Ordered data implies ordered solutions: checks min (u - v) >= -tol.
MaxPrincipleVerdict check_comparison(const SolveReport& u, const SolveReport& v,
                                     double tol = 1e-10);

/// Structural discrete maximum-principle data of the assembled form:
/// nonnegative diagonal, nonpositive off-diagonal lags, nonnegative row sums
/// (including the killing term). Holds for P0 assemblies.
struct MMatrixReport {
  bool diagonal_nonnegative = false;
  bool offdiagonal_nonpositive = false;
  bool row_sums_nonnegative = false;
  double min_row_sum = 0;
  double max_offdiagonal = 0;
  bool pass() const {
    return diagonal_nonnegative && offdiagonal_nonpositive && row_sums_nonnegative;
  }
};
MMatrixReport check_m_matrix(const FormMatrix& fm, double tol = 1e-12);

struct Barrier {
  enum class Case { UnboundedSupport, CompactSupport };
  Case support_case = Case::UnboundedSupport;
  GridFunction w;
  double c_sup = 0;      // 0 <= w <= c_sup
  double lower_lw = 0;   // min_i (K w)_i / (M 1)_i, the discrete certificate (>= 1 on pass)
  bool certificate = false;
  double scale_constant = 0;  // the measure mass the barrier is scaled by
};

/// Build a barrier w >= 0 with Lw >= 1 on Omega discretely: a mollified
/// indicator divided by a far-ball mass when the measure has mass far out, a
/// concave paraboloid cap scaled by the concavity gap otherwise.
Barrier build_barrier(const FormMatrix& fm);

struct LinfBound {
  std::vector<double> eps_schedule;
  std::vector<double> c_eps_inverse;   // inf_x nu((Omega_eps)^c - x) per eps
  double c_eff_inverse = 0;            // monotone limit estimate over the schedule
  double bj_inf_kappa = 0;             // inf_x nu(Omega^c - x)
  double gap = 0;                      // bj_inf_kappa - c_eff_inverse
  double bound = 0;                    // c_eff * ||f||_inf + ||g||_inf
  double max_abs_solution = 0;
  bool asserted = false;               // false when the infimum degenerates to 0
  bool holds = false;
};

/// Sup-norm bound via dilation barriers: for decreasing eps, the infimum over
/// sampled x in Omega (grid centers, seeded uniform draws, and boundary-layer
/// probes at fractions of eps) of the exterior mass of the dilated domain, plus
/// the sharper undilated quantity inf_x nu(Omega^c - x) for comparison.
LinfBound linf_bound(const SolveReport& rep, const FormMatrix& fm, const GridFunction& f,
                     const GridFunction& g, const std::vector<double>& eps_schedule,
                     uint64_t seed, int n_random = 64, double tol = 1e-9);

}  // namespace nld
