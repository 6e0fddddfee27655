#pragma once

#include <stdexcept>
#include <string>

namespace shortfall {

// Base for all library errors so callers can catch everything from one spot.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (CLI exit code 2).
struct ConfigError : Error {
  using Error::Error;
};

// exp/pow left the double range during a loss evaluation.
struct DomainOverflow : Error {
  using Error::Error;
};

// Second derivative requested where the loss has a kink.
struct NotDifferentiable : Error {
  using Error::Error;
};

// inf l' <= 0 on the requested interval; constants are meaningless there.
struct EtaNonpositive : Error {
  using Error::Error;
};

// Operation applied to a model kind it does not support.
struct WrongKind : Error {
  using Error::Error;
};

struct ThetaOutOfDomain : Error {
  using Error::Error;
};

// Empirical g does not change sign across the bracket.
struct NoSignChange : Error {
  using Error::Error;
};

// Doubling search exhausted its budget without a valid bracket.
struct BracketNotFound : Error {
  using Error::Error;
};

// Denominator of the gradient ratio fell under the eta guard.
struct BmBelowEta : Error {
  using Error::Error;
};

// A bound evaluator's step-size regime inequality is violated (exit code 4).
struct RegimeViolation : Error {
  using Error::Error;
};

// Bound evaluator called with a step schedule outside the requested case.
struct CaseMismatch : Error {
  using Error::Error;
};

// A closed-form reference value is required but not available (exit code 3).
struct OracleUnavailable : Error {
  using Error::Error;
};

// Rate fitting fed a non-positive value (log-log fit impossible).
struct NonPositiveValue : Error {
  using Error::Error;
};

// CSV header or row layout differs from the frozen schema.
struct SchemaMismatch : Error {
  using Error::Error;
};

}  // namespace shortfall
