#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <memory>
#include <vector>

#include "nld/grid.hpp"
#include "nld/levy.hpp"

namespace nld {

/// 1-D autocorrelation of the basis bump at spacing h:
/// P0: (h - |t|)_+ ; P1: h * B(t/h) with the standard hat autocorrelation B.
double autocorr_1d(Basis basis, double h, double t);
/// Product over axes, A(v) = prod_k a(v_k).
double autocorr(const Grid& g, const Point& v);
/// Second derivative of the 1-D autocorrelation (P1 only; used by the
/// small-jump Taylor correction in delta-decomposition consistency bounds).
double autocorr_1d_dd(Basis basis, double h, double t);

/// Symmetric translation-invariant stencil on the dof lattice. Bilinear forms
/// of grid functions are B(u,v) = sum_m s(m) sum_i u_i v_{i+m} with s(-m)=s(m);
/// the lag sum runs over both signs, the diagonal lag once.
class Stencil {
 public:
  Stencil() = default;
  explicit Stencil(int dim) : dim_(dim) {}

  void add_symmetric(std::array<int, 2> lag, double v);  // adds at +lag and -lag
  void add(std::array<int, 2> lag, double v);            // adds at lag only
  double coeff(std::array<int, 2> lag) const;
  std::size_t size() const { return entries_.size(); }

  struct Entry {
    std::array<int, 2> lag;
    double value;
  };
  const std::vector<Entry>& entries() const;  // finalized, deterministic order

  void apply(const Grid& g, const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
  double quadratic(const Grid& g, const Eigen::VectorXd& u) const;
  double bilinear(const Grid& g, const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

 private:
  int dim_ = 1;
  mutable std::vector<Entry> entries_;
  mutable bool dirty_ = false;
  std::vector<std::pair<int64_t, double>> raw_;
  friend class FormAssembler;
};

/// Assembled Gram data of the bilinear form <.,.>_nu over the grid basis.
///
/// stiffness: the solver form. It corresponds exactly to the measure
///   nu restricted to {|y| <= E}: a pairwise part over {eps_pv < |y| <= E}
///   assembled from basis-autocorrelation overlaps, the singular region
///   {|y| <= eps_pv} integrated exactly through the symmetrized second
///   difference (which vanishes at the origin, so the integral converges
///   absolutely), and the far mass nu({|y| > E}) acting as a killing term
///   through the mass stencil (E exceeds the lattice diameter; such jumps
///   cannot connect two dofs). For atomic measures the pairwise part is exact
///   overlap algebra with eps_pv = 0.
/// mass: the L^2 Gram stencil A(mh) (diagonal for P0, banded for P1).
/// pair_weights: PW(m) = iint_{C_0 x C_m} dnu_x(y) dx, the nonnegative pair
///   weights used by restricted double sums (exact for P0; for P1 a consistent
///   nodal surrogate, see pair_sum()).
struct FormMatrix {
  std::shared_ptr<const Grid> grid;
  std::shared_ptr<const LevyMeasure> measure;
  Stencil stiffness;
  Stencil mass;
  Stencil pair_weights;
  double kappa = 0;           // nu({|y| > E}) folded into the killing term
  double eps_pv = 0;          // inner cutoff for radial kernels (h/2)
  double sigma2_eps = 0;      // second moment below eps_pv (reported)
  double pairwise_mass = 0;   // nu({eps_pv < |y| <= E})
  double trunc_radius = 0;    // E
  double assembly_error = 0;  // quadrature error estimate accumulated over lags

  // --- solver form
  double quadratic(const GridFunction& u) const;
  double bilinear(const GridFunction& u, const GridFunction& v) const;
  void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;

  // --- L^2 mass
  double mass_quadratic(const GridFunction& u) const;
  double mass_bilinear(const GridFunction& u, const GridFunction& v) const;
  void mass_apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
  /// Masked L^2 Gram: sum over lags of A(mh) u_i v_{i+m} with both dofs in the mask.
  double mass_quadratic_masked(const GridFunction& u, const std::vector<uint8_t>& mask) const;

  // --- restricted double sums (ordered pairs)
  /// sum_{i in A, j in B} (u_i - u_j)^2 PW(j - i)  ~ iint_{A x B} (u(x)-u(y))^2 dnu_x(y) dx
  double pair_sum(const GridFunction& u, const std::vector<uint8_t>& A,
                  const std::vector<uint8_t>& B) const;
  /// nu({y : c_i + y outside the lattice box}), exact per dof (cached).
  double beyond_mass(std::size_t dof) const;

  /// Energy of u against the right-hand side f (Omega^c x Omega^c pairs do not
  /// contribute): E(u) = 1/4 iint_{(Omega^c)^2 complement} (u(x)-u(y))^2 dnu
  ///                      - (f,u)_Omega,
  /// evaluated with the same measure truncation as the stiffness form so that
  /// E(u + l*phi) - E(u) = l(<u,phi> - (f,phi)) + l^2/2 <phi,phi> holds exactly
  /// for interior-supported phi.
  double energy(const GridFunction& u, const GridFunction& f) const;

  /// Export in coordinate-list text form (row col value per line, row-major
  /// sorted), active dofs only.
  void write_coo(std::ostream& os) const;

  /// Interior block and interior-halo coupling as Eigen sparse matrices
  /// (interior dofs keep their relative order).
  Eigen::SparseMatrix<double> interior_matrix() const;
  void split_indices(std::vector<std::size_t>& interior, std::vector<std::size_t>& halo) const;

 private:
  mutable std::vector<double> beyond_cache_;
};

/// Assemble the Gram data for the measure over the grid. Throws
/// AdmissibilityError when the basis is inadmissible for the measure.
FormMatrix assemble(std::shared_ptr<const LevyMeasure> nu, std::shared_ptr<const Grid> grid);

/// Exact shift energy of a grid function: <u,u>_{delta_y} = 1/2 ∫ (u(x) - u(x+y))^2 dx.
double shift_energy(const GridFunction& u, const Point& y);

struct DecompositionResult {
  double value = 0;      // ∫ <u,u>_{delta_y} dnu + killing + Taylor part
  double tolerance = 0;  // quadrature error + shared-truncation slack
};

/// Evaluate <u,u>_nu through the Dirac decomposition: quadrature of the exact
/// shift energies of u against nu on {0 < |y| <= E} plus the same killing mass
/// as the assembled form. Independent of the stencil assembly path.
DecompositionResult delta_decomposition(const LevyMeasure& nu, const GridFunction& u,
                                        const FormMatrix& reference);

enum class NormSpace { VOmega, HOmega, HFull, HRestricted };

/// Generalized Sobolev norms on the truncated lattice. VOmega couples D x R^n
/// with D the domain interior, HOmega is the same norm for halo-supported u,
/// HFull couples R^n x R^n. HRestricted takes an explicit dof mask D and
/// returns the D x D seminorm (double integral without the 1/2, no L^2 part),
/// the convention used for exterior-data energies.
double grid_norm(const FormMatrix& fm, const GridFunction& u, NormSpace space,
                 const std::vector<uint8_t>* mask = nullptr);

}  // namespace nld
