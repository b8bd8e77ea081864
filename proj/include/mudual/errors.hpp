#pragma once

#include <stdexcept>
#include <string>

namespace mudual {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or counts that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite inputs or a numerically degenerate quantity.
class NumericsError : public Error {
 public:
  using Error::Error;
};

/// Iterative method ran out of iterations. Subclasses carry the partial result.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The duality transform matrix is too ill-conditioned to solve.
class SingularTransformError : public Error {
 public:
  using Error::Error;
};

/// The duality transform produced a negative power.
class InfeasibleTransformError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive search refused because it would be too expensive.
class CostGuardError : public Error {
 public:
  using Error::Error;
};

/// A covariance matrix expected to be rank one is not.
class RankError : public Error {
 public:
  using Error::Error;
};

}  // namespace mudual
