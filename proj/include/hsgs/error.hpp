#pragma once

#include <stdexcept>
#include <string>

namespace hsgs {

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (bad sizes, mismatched grids).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Index or parameter outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Solver failure: non-convergence, singular system, non-finite data.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A structural identity that should hold to round-off did not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace hsgs
