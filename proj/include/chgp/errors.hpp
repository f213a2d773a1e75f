#pragma once

#include <stdexcept>
#include <string>

namespace chgp {

/// Base class for failures of the numerical layer (bad parameters, non-convergence,
/// indefinite matrices). The CLI maps these to exit status 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DecompositionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed user input: config files, CSV tables, inconsistent dimensions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace chgp
