#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nld/form.hpp"

namespace nld {

struct SolveOptions {
  double cg_tol = 1e-10;     // relative residual
  int max_iterations = 50000;
  bool jacobi = false;       // diagonal preconditioner (the lattice diagonal is constant)
  std::optional<Eigen::VectorXd> initial_guess;  // interior dofs
};

/// Sup-norm certificate attached to a solve (filled by the bounds machinery).
struct LinfRecord {
  double c_used = 0;            // constant multiplying ||f||_inf
  double bound = 0;             // c_used * ||f||_inf + ||g||_inf
  double max_abs_solution = 0;
  bool asserted = false;        // bound checked against the solution
};

struct SolveReport {
  GridFunction solution;        // full grid: interior solution + exterior data
  double residual_norm = 0;     // final relative CG residual
  int iterations = 0;
  double energy = 0;
  std::optional<LinfRecord> linf;
  std::map<std::string, double> timings_ms;  // reporting only, never serialized deterministically
};

/// Solve the discrete weak problem: find u with u = g on the halo and
/// <u,phi>_nu = (f,phi) for all interior basis functions, via the homogeneous
/// reduction K_int w = M f - K_cpl g and conjugate gradients (the interior
/// block is symmetric positive definite by the discrete Poincare inequality).
SolveReport solve(const FormMatrix& fm, const GridFunction& f, const GridFunction& g,
                  const SolveOptions& opt = {});

/// Max over `trials` random interior test functions phi (coefficients i.i.d.
/// uniform on [-1,1], seeded) of |<u,phi>_nu - (f,phi)| / ||phi||_{V_Omega}.
double verify_weak_identity(const SolveReport& rep, const FormMatrix& fm, const GridFunction& f,
                            int trials, uint64_t seed);

/// Same residual with test functions supported in a subdomain of Omega.
double restriction_check(const SolveReport& rep, const FormMatrix& fm, const GridFunction& f,
                         const Domain& omega_prime, int trials, uint64_t seed);

struct PointwiseValue {
  double value = 0;
  double error = 0;
};

/// Pointwise L u(x) through the absolutely convergent symmetrized integral
/// 1/2 ∫ (2u(x) - u(x+y) - u(x-y)) dnu(y) for an analytic u supported in
/// {|x| <= u_support_radius} (the far field then contributes u(x) nu(far)).
PointwiseValue pointwise_apply(const LevyMeasure& nu, const std::function<double(Point)>& u,
                               const Point& x, double u_support_radius, double tol = 1e-10);

struct ConsistencyReport {
  bool skipped = false;
  std::string notice;
  std::vector<double> h;
  std::vector<double> residual;  // max normalized weak residual per grid
  double rate = 0;               // empirical order between the last two grids
};

/// Check that a twice continuously differentiable u with f := Lu computed by
/// pointwise quadrature satisfies the discrete weak identity, across a
/// sequence of grids; reports the empirical convergence order.
ConsistencyReport strong_consistency_check(std::shared_ptr<const LevyMeasure> nu,
                                           std::shared_ptr<const Domain> domain,
                                           const std::function<double(Point)>& u,
                                           double u_support_radius,
                                           const std::vector<double>& hs, double r_trunc,
                                           Basis basis, int trials, uint64_t seed);

}  // namespace nld
