#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tdvi {

/// Base class for every error raised by the library. `kind()` returns a stable
/// machine-readable tag used in trajectory failure records and CLI reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual std::string_view kind() const noexcept { return "Error"; }
};

/// A model callback produced a non-finite value, or could not be evaluated.
class EvaluationError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] std::string_view kind() const noexcept override { return "EvaluationError"; }
};

/// Two-point evaluation with coincident times (t1 == t0).
class ZeroTimeStep : public Error {
 public:
  using Error::Error;
  [[nodiscard]] std::string_view kind() const noexcept override { return "ZeroTimeStep"; }
};

/// Times fail strict monotonicity, or a solved step leaves the [min_h, max_h] band.
class NonMonotoneTime : public Error {
 public:
  using Error::Error;
  [[nodiscard]] std::string_view kind() const noexcept override { return "NonMonotoneTime"; }
};

/// The velocity Hessian of the Lagrangian is numerically singular.
class DegenerateLagrangian : public Error {
 public:
  using Error::Error;
  [[nodiscard]] std::string_view kind() const noexcept override { return "DegenerateLagrangian"; }
};

/// Newton iteration exhausted its budget without meeting the tolerance.
class NewtonDivergence : public Error {
 public:
  using Error::Error;
  [[nodiscard]] std::string_view kind() const noexcept override { return "NewtonDivergence"; }
};

/// A step's linearization (or the two-point existence block) is rank-deficient.
/// Raised deterministically; the solver never regularizes past it.
class SingularJacobian : public Error {
 public:
  using Error::Error;
  [[nodiscard]] std::string_view kind() const noexcept override { return "SingularJacobian"; }
};

/// Requested builtin problem name does not exist.
class UnknownProblem : public Error {
 public:
  using Error::Error;
  [[nodiscard]] std::string_view kind() const noexcept override { return "UnknownProblem"; }
};

/// Config text is syntactically malformed; message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] std::string_view kind() const noexcept override { return "ParseError"; }
};

/// Config is well-formed but semantically invalid; message names the key.
class ValidationError : public Error {
 public:
  using Error::Error;
  [[nodiscard]] std::string_view kind() const noexcept override { return "ValidationError"; }
};

}  // namespace tdvi
