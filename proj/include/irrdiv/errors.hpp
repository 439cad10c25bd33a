#pragma once

#include <stdexcept>
#include <string>

namespace irrdiv {

/// Input violates an operation's precondition (bad discriminant, composite
/// "prime", mismatched group, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configured search or memory bound would be exceeded. Raised instead of
/// truncating or running unboundedly.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace irrdiv
