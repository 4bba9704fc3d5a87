#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nld/geometry.hpp"

namespace nld {

/// Isotropic density profile V: nu(dy) = V(|y|) dy on R^n. All radial
/// integrals carry the sphere factor omega_{n-1} t^{n-1}.
class RadialKernel {
 public:
  enum class Profile { FractionalStable, CompactSupport, Tempered, UserProfile };

  /// Stable kernel V(t) = C^{-1} t^{-n-alpha} with
  /// C = 2^alpha Gamma((n+alpha)/2) / (pi^{n/2} |Gamma(-alpha/2)|).
  static RadialKernel fractional_stable(double alpha, int dim);
  /// Quadratic cap supported on [0, r1]: V(t) = (1 - (t/r1)^2)_+ .
  static RadialKernel compact_quadratic_cap(double r1, int dim);
  /// Tempered stable V(t) = C^{-1} t^{-n-alpha} e^{-decay t}.
  static RadialKernel tempered(double alpha, double decay, int dim);
  /// Arbitrary profile; integrability of (1 ∧ t^2) against it is certified by
  /// quadrature at construction of the measure.
  static RadialKernel user_profile(std::function<double(double)> V, int dim,
                                   double support_radius = std::numeric_limits<double>::infinity());

  Profile profile() const { return profile_; }
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  double decay() const { return decay_; }
  /// Density value V(t); zero below the truncation cut or beyond the support.
  double density(double t) const;
  /// Radius of the support (inf when unbounded).
  double support_radius() const { return support_radius_; }
  /// Lower truncation of small jumps (0 unless produced by truncate_small_jumps).
  double inner_cut() const { return inner_cut_; }
  RadialKernel with_inner_cut(double delta) const;

  /// The fractional-stable normalization constant C (for its own profile).
  static double stable_normalization(double alpha, int dim);

  // --- radial integrals of the measure (quadrature with closed forms where available)
  /// nu({|y| > r})
  double mass_above(double r) const;
  /// nu({r1 <= |y| <= r2})
  double mass_between(double r1, double r2) const;
  /// ∫_{|y| < eps} |y|^2 dnu
  double second_moment_below(double eps) const;
  /// ∫_{|y| < eps} |y| dnu (infinite when small jumps are not integrable)
  double first_moment_below(double eps) const;
  /// ∫ (1 ∧ |y|^2) dnu; DivergenceError identifies the failing regime.
  double levy_moment() const;
  bool small_jump_integrable() const;

 private:
  Profile profile_ = Profile::UserProfile;
  int dim_ = 1;
  double alpha_ = 0, decay_ = 0, amplitude_ = 1;
  double support_radius_ = std::numeric_limits<double>::infinity();
  double inner_cut_ = 0;
  std::function<double(double)> user_;
  mutable std::optional<bool> sji_cache_;
};

/// Mirror pair of atoms at +-y with the given weight each.
struct AtomPair {
  Point y;
  double weight;
};

/// Analytic remainder of a truncated atomic series: total mass of the atoms
/// beyond |y| > radius. Only radius >= 1 is supported so that the far atoms
/// contribute exactly their mass to the Levy moment.
struct FarTail {
  double mass = 0;
  double radius = 0;
};

struct TailMass {
  double value = 0;
  double error = 0;  // quadrature/truncation error bound
};

/// Symmetric Levy measure: atomic list, isotropic density, or a flat mixture.
class LevyMeasure {
 public:
  enum class Kind { Atomic, Radial, Mixture };

  /// Build a symmetric atomic measure. Missing mirror atoms are added with
  /// equal weight; the count of additions is reported via mirrors_added.
  static LevyMeasure atomic(const std::vector<std::pair<Point, double>>& atoms, int dim,
                            FarTail far = {}, int* mirrors_added = nullptr);
  /// The series sum_{k != 0} delta_k / k^2 truncated at |k| <= K, with the
  /// analytic tail pi^2/3 - 2 sum_{k<=K} k^{-2} carried as a far-tail mass.
  static LevyMeasure zeta_series(int K);
  static LevyMeasure radial(RadialKernel kernel);
  static LevyMeasure mixture(std::vector<LevyMeasure> parts);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  /// ∫ (1 ∧ |y|^2) dnu, cached at construction.
  double levy_moment() const { return levy_moment_; }
  bool small_jump_integrable() const;
  /// Total mass nu(R^n) (inf for strongly singular kernels).
  double total_mass() const;
  bool finite_mass() const { return std::isfinite(total_mass()); }
  /// Radius of the support including any far tail (inf when unbounded).
  double support_radius() const;

  /// nu(region): exact sums for atomic parts (with certified far-tail
  /// accounting), quadrature with a reported error bound for radial parts.
  TailMass tail_mass(const Region& region) const;

  /// Restriction to {|y| > delta}; the result has finite total mass.
  LevyMeasure truncate_small_jumps(double delta) const;

  // representation access (assembly, simulation)
  const std::vector<AtomPair>& atom_pairs() const { return pairs_; }
  const FarTail& far_tail() const { return far_; }
  const RadialKernel& kernel() const { return *kernel_; }
  const std::vector<LevyMeasure>& parts() const { return parts_; }

  /// Apply f to every primitive (non-mixture) component.
  void for_each_component(const std::function<void(const LevyMeasure&)>& f) const;

 private:
  Kind kind_ = Kind::Atomic;
  int dim_ = 1;
  double levy_moment_ = 0;
  std::vector<AtomPair> pairs_;            // Atomic
  FarTail far_;                            // Atomic
  std::shared_ptr<const RadialKernel> kernel_;  // Radial
  std::vector<LevyMeasure> parts_;         // Mixture (flat)
};

}  // namespace nld
