#pragma once

#include <stdexcept>
#include <string>

namespace hasel {

// Argument outside a model's physical domain (negative contraction, voltage above v_max, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Bad or inconsistent experiment configuration, detected before any simulation runs.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string pointer = {})
      : std::runtime_error(what), pointer_(std::move(pointer)) {}

  // JSON pointer of the offending entry, empty when not tied to one.
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

// The plant model violated one of its own assumptions (e.g. a non-monotone force residual).
class ModelConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Free-motion and grasp current windows overlap; no separating threshold exists.
class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(double min_free, double max_grasp);

  double min_free() const { return min_free_; }
  double max_grasp() const { return max_grasp_; }

 private:
  double min_free_;
  double max_grasp_;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contact-aware controller still ramping past the end of its baseline trajectory.
class BaselineExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trace file does not follow the SignalTrace column schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hasel
