#pragma once

#include <stdexcept>
#include <string>

namespace qubof {

/// Raised when a caller breaks an operation's precondition (shape, range,
/// bijectivity and so on).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The input has no information to work with, e.g. an all-zero model matrix.
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A request exceeds a configured size limit (exhaustive search, exact
/// automorphism counting).
class SizeLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Internal consistency check that reports through ContractViolation.
inline void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation(what);
}

}  // namespace qubof
