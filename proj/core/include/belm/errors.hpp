#pragma once

#include <stdexcept>
#include <string>

namespace belm {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or violated preconditions: bad method settings, malformed
// grids, out-of-range indices. Recoverable by fixing the caller's input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A schedule table that violates a structural invariant (non-positive alpha,
// sigma-bar not strictly increasing, mismatched lengths, ...).
class ScheduleError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// A method configuration that admits no inverse map (e.g. BDIA with gamma = 0).
class NotInvertibleError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// A linear system too close to singular to solve reliably.
class SingularError : public Error {
 public:
  using Error::Error;
};

// A numerical failure at runtime: non-finite state, residual above tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// An order fit requested with fewer than three usable (h, error) pairs.
class InsufficientDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace belm
