#pragma once

#include <stdexcept>
#include <string>

namespace pestab {

// Base of every error the library throws. The CLI maps subclasses onto exit
// codes, so new failure kinds should derive from the closest existing one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input shapes are incompatible (non-square where square is needed, etc.).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A documented precondition on the inputs does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NotNeutrallyStable : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

class RankDeficiencyError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// A state that must be nonzero is (numerically) zero.
class DegenerateStateError : public DomainError {
 public:
  using DomainError::DomainError;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// A constructed object failed its own post-construction check.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Computed quantities contradict an invariant that holds whenever the
// preconditions do.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace pestab
