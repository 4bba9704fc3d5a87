#pragma once

#include <stdexcept>
#include <string>

namespace nld {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid measure/domain/grid specification (bad parameters, asymmetry, atom at origin, ...).
struct SpecError : Error {
  using Error::Error;
};

/// A required integral diverges. `regime` identifies where ("origin" or "infinity").
struct DivergenceError : Error {
  std::string regime;
  DivergenceError(const std::string& what, std::string regime_)
      : Error(what), regime(std::move(regime_)) {}
};

/// Basis not admissible for the given measure (indicators not in H_nu).
struct AdmissibilityError : Error {
  using Error::Error;
};

/// Iterative solver failed to converge.
struct SolverError : Error {
  using Error::Error;
};

/// Point outside the tubular neighborhood of a C^{1,1} boundary.
struct OutOfTubeError : Error {
  using Error::Error;
};

/// Malformed run configuration.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace nld
