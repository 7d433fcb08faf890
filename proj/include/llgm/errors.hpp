#pragma once

#include <stdexcept>
#include <string>

namespace llgm {

/// Bad configuration, malformed input file or violated precondition on
/// user-supplied data. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or evaluation that cannot be completed numerically
/// (Cholesky failure after jitter, underflowing CPO, ...). Maps to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Posterior mass touches the edge of a hyperparameter grid.
class BoundaryMassError : public NumericalError {
 public:
  BoundaryMassError(const std::string& what, int component, bool upper)
      : NumericalError(what), component_(component), upper_(upper) {}

  int component() const { return component_; }
  bool upper() const { return upper_; }

 private:
  int component_;
  bool upper_;
};

}  // namespace llgm
