#pragma once

#include <stdexcept>
#include <string>

namespace amplab {

// User-facing failures (bad parameters, invalid input files, out-of-domain
// queries) map to CLI exit code 1; numerical failures map to exit code 2.

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a time step would push exp() arguments past the overflow guard.
class StabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace amplab
