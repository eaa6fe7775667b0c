#pragma once

#include <stdexcept>
#include <string>

namespace amqf {

/// Raised when a constructor or operation receives arguments outside its
/// documented domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The structure cannot accept more items without violating its load or
/// shift-bound guarantees. The structure is left in a valid state.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural invariant check failed. Indicates a bug or memory corruption.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Unreadable or malformed workload input.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace amqf
