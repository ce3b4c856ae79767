#pragma once

#include <stdexcept>
#include <string>

namespace volchain {

/// Malformed input data (bad tags, bad records, invalid requests).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter set that violates its own invariants (e.g. zero weight sum).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation invoked in a state that does not allow it.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace volchain
