#ifndef NHMECH_ERRORS_HPP
#define NHMECH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nhmech {

/// Base class for every error raised by the engine.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The n x n frame block is numerically singular (rcond below threshold).
struct SingularFrame : Error {
  using Error::Error;
};

/// User-supplied structure coefficients disagree with the commutators.
struct FrameInconsistency : Error {
  using Error::Error;
};

/// Newton iteration for the Legendre inversion failed to converge.
struct NewtonDivergence : Error {
  using Error::Error;
};

/// The assembled left-hand matrix of the equations of motion is singular.
struct SingularMass : Error {
  using Error::Error;
};

struct MaxStepsExceeded : Error {
  using Error::Error;
};

/// A right-hand-side evaluation failed mid-integration; carries the time.
struct RhsFailure : Error {
  RhsFailure(const std::string& what, double t_fail)
      : Error(what + " (at t=" + std::to_string(t_fail) + ")"), t(t_fail) {}
  double t;
};

/// Slice points are not simultaneous; the linear integral is undefined.
struct NonSimultaneousSlice : Error {
  using Error::Error;
};

struct OracleUnavailable : Error {
  using Error::Error;
};

struct UnknownModel : Error {
  using Error::Error;
};

struct InvalidParameter : Error {
  using Error::Error;
};

/// Scenario configuration failed schema validation.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace nhmech

#endif
