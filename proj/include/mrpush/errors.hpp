#pragma once

#include <stdexcept>
#include <string>

namespace mrpush {

/// Search exhausted its budget or found no solution. Maps to CLI exit code 1.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input or violated invariant. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failure. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mrpush
