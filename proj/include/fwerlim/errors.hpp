#pragma once

#include <stdexcept>
#include <string>

namespace fwerlim {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent or malformed request (length mismatch, unknown name, empty grid).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Correlation model that cannot be used for sampling (e.g. not PSD after jitter).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fwerlim
