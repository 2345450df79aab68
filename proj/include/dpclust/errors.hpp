#pragma once

#include <stdexcept>
#include <string>

namespace dpclust {

/// Caller broke a documented precondition (empty center set, k <= 0, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or out-of-domain input data (point outside the Lambda-ball, bad CSV line).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stream-driven object received more updates than its horizon T allows.
class HorizonExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// brute_force_opt refused an enumeration larger than its guard.
class OracleTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Post-processing asked for centers of an empty weighted set.
class NoData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input too small for a transform whose accuracy needs a minimum size.
class TooSmall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural bound (|F| cap, buffer bound) was exceeded.
class CapacityExceeded : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dpclust
