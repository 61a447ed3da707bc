#pragma once

#include <stdexcept>
#include <string>

namespace bilayer {

/// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Domain or mesh description that cannot be realized (non-positive sizes, empty Dirichlet set).
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot be evaluated (bad callback output, point outside a cell).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A state violating the nodal metric bound, or a singular constrained system.
class InadmissibleState : public Error {
 public:
  using Error::Error;
};

/// Inner fixed-point iteration exceeded its budget.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// A runtime invariant of the flow (energy decrease, metric monotonicity) failed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Linear solve whose residual exceeds the accepted tolerance.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed experiment configuration.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace bilayer
