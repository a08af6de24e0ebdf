#pragma once

#include <stdexcept>
#include <string>

namespace conecert {

enum class ErrorCode {
  // geometry
  EmptyGrid,
  DegenerateCut,
  // operator validation / assembly
  NotElliptic,
  AsymmetricDiffusion,
  NegativeReaction,
  SignPatternViolation,
  AssemblyError,
  GridMismatch,
  // linear algebra / spectral
  SolverDiverged,
  NoConvergence,
  NotPositiveOperator,
  ZeroInput,
  // expression language
  SyntaxError,
  UnknownIdentifier,
  UnboundName,
  EvalDomainError,
  // functionals
  NegativeFunctionalValue,
  PointOutsideDomain,
  NegativeNonlinearity,
  NegativeWeight,
  BoundViolated,
  // fixed point
  OutOfBox,
  // certificates
  MissingConstant,
  BoundsNotVerified,
  // problem files
  SchemaError,
  ValidationError,
  // catch-all
  Internal,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a machine-checkable error code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace conecert
