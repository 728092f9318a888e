#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ulrates {

// Common base so callers can catch everything from this library at once.
// kind() is a stable machine-readable tag (the CLI puts it in error records).
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const { return "error"; }
};

// An argument violates a documented precondition (sign, range, emptiness...).
class invalid_parameter_error : public error {
 public:
  explicit invalid_parameter_error(const std::string& what) : error(what) {}
  const char* kind() const override { return "invalid_parameter"; }
};

// A computation needs a piece of potential metadata that is unknown.
class missing_metadata_error : public error {
 public:
  missing_metadata_error(const std::string& field, const std::string& context)
      : error("missing metadata '" + field + "' required by " + context),
        field_(field) {}
  const std::string& field() const { return field_; }
  const char* kind() const override { return "missing_metadata"; }

 private:
  std::string field_;
};

// An iterative or factorization-based routine failed to converge.
class numerical_failure_error : public error {
 public:
  numerical_failure_error(const std::string& what, std::int64_t diagnostic)
      : error(what + " (diagnostic " + std::to_string(diagnostic) + ")"),
        diagnostic_(diagnostic) {}
  std::int64_t diagnostic() const { return diagnostic_; }
  const char* kind() const override { return "numerical_failure"; }

 private:
  std::int64_t diagnostic_;
};

// A simulated trajectory left the sane region (non-finite or huge state).
class divergence_error : public error {
 public:
  divergence_error(std::int64_t step_index, std::int64_t trajectory_index)
      : error("trajectory " + std::to_string(trajectory_index) +
              " diverged at step " + std::to_string(step_index)),
        step_index_(step_index),
        trajectory_index_(trajectory_index) {}
  std::int64_t step_index() const { return step_index_; }
  std::int64_t trajectory_index() const { return trajectory_index_; }
  const char* kind() const override { return "divergence"; }

 private:
  std::int64_t step_index_;
  std::int64_t trajectory_index_;
};

// A decay fit could not be performed; the message names the failed precondition.
class fit_failure_error : public error {
 public:
  explicit fit_failure_error(const std::string& what) : error(what) {}
  const char* kind() const override { return "fit_failure"; }
};

}  // namespace ulrates
