#pragma once

#include <stdexcept>
#include <string>

namespace photon_limits {

// Invalid numeric input to an operation (negative rate, out-of-grid lookup...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Inconsistent or incomplete configuration; surfaced before any work runs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The operation does not support the given flux model (e.g. closed-form
// effective pulse requested for a tabulated pulse).
class UnsupportedModel : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace photon_limits
