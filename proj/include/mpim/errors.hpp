#pragma once

#include <stdexcept>
#include <string>

namespace mpim {

/// Argument outside the documented domain of an operation.
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix cannot be mapped onto conductances (nothing to encode).
class ScalingError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Drift calibration read a non-positive summed conductance.
class CalibrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Krylov recurrence hit a zero denominator.
class BreakdownError : public std::runtime_error {
public:
  BreakdownError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const noexcept { return iteration_; }

private:
  int iteration_;
};

/// Non-finite values appeared in the refined solution.
class DivergenceError : public std::runtime_error {
public:
  DivergenceError(const std::string& what, int refinement)
      : std::runtime_error(what), refinement_(refinement) {}
  int refinement() const noexcept { return refinement_; }

private:
  int refinement_;
};

/// A solve did not reach its tolerance within the refinement budget.
class ConvergenceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment or noise configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace mpim
