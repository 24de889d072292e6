#ifndef ORBITRACK_ERRORS_HPP
#define ORBITRACK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace orbitrack {

/// Malformed inputs: dimension mismatches, invalid parameters, bad configs.
struct StructuralError : std::invalid_argument {
  explicit StructuralError(const std::string& what) : std::invalid_argument(what) {}
};

/// Non-finite values produced by a numerical operation.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver failed to reach its tolerance.
struct ConvergenceError : std::runtime_error {
  double last_residual;
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), last_residual(residual) {}
};

/// Profile does not decay at the box boundary; the domain is too small.
struct DomainTooSmallError : std::runtime_error {
  explicit DomainTooSmallError(const std::string& what) : std::runtime_error(what) {}
};

/// Pattern is not linearly stable at these parameters (spectral gap <= 0 or
/// fitted decay rate <= 0).
struct InstabilityError : std::runtime_error {
  explicit InstabilityError(const std::string& what) : std::runtime_error(what) {}
};

/// Center/stable splitting could not be verified against the group tangents.
struct DecompositionError : std::runtime_error {
  explicit DecompositionError(const std::string& what) : std::runtime_error(what) {}
};

/// Phase tracking left its trust region; the phase is no longer meaningful.
struct TrackingLostError : std::runtime_error {
  explicit TrackingLostError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace orbitrack

#endif  // ORBITRACK_ERRORS_HPP
