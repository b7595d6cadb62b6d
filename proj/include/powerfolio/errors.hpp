#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace powerfolio {

/// Structural mismatch between container shapes (drift length vs covariance
/// order, benchmark weights vs asset count, ...). Structural problems throw;
/// numerical problems are reported through ValidationReport findings.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A parameter outside its admissible range, e.g. a risk-aversion exponent
/// outside (0, 1) or a non-positive horizon.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An evaluation outside the mathematical domain, e.g. the utility of a
/// non-positive wealth.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A linear-algebra operation that cannot be completed at the required
/// accuracy: a failed factorization pivot or an ill-conditioned system.
class ConditioningError : public std::runtime_error {
 public:
  explicit ConditioningError(const std::string& message, long pivot_index = -1)
      : std::runtime_error(message), pivot_index_(pivot_index) {}

  /// Index of the offending pivot, or -1 when not pivot-related.
  long pivot_index() const noexcept { return pivot_index_; }

 private:
  long pivot_index_;
};

/// Malformed input: parse errors, unknown or missing fields, type mismatches.
/// Carries the offending field path when one is known.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& message, std::string field_path = {})
      : std::runtime_error(field_path.empty() ? message
                                              : field_path + ": " + message),
        field_path_(std::move(field_path)) {}

  const std::string& field_path() const noexcept { return field_path_; }

 private:
  std::string field_path_;
};

}  // namespace powerfolio
