#pragma once

#include <stdexcept>
#include <string>

namespace frfnet {

/// Malformed or inconsistent configuration (maps to exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, truncated or corrupt data, failed hash checks, dead spectral bins
/// (maps to exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition or invariant of an operation was violated (exit code 4).
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative numerical method failed to converge.
class ConvergenceError : public ContractError {
 public:
  using ContractError::ContractError;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace frfnet
