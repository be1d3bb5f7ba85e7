#pragma once

#include <stdexcept>
#include <string>

namespace combopt {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Value outside the allowed domain (sizes, NaN constants, bounds).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Incompatible or unsupported operand shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Node of the wrong kind, e.g. a non-comparison passed as a constraint.
class TypeErrorDomain : public Error {
 public:
  using Error::Error;
};

/// Operation not allowed in the current object state (second objective,
/// mutation after freeze, structurally invalid assignment).
class StateError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Instance exceeds the size cap of an exact oracle.
class SizeError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace combopt
