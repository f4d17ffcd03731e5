#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace metabal {

/// Input outside an estimator's domain (too few studies, non-finite values).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A root could not be bracketed or the iteration budget ran out.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular or collinear design in a regression fit.
class RegressionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A result was paired with a dataset it was not computed from.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed external input. Carries the offending row (1-based line number)
/// and/or field name when known.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& message,
                           std::optional<std::string> field = std::nullopt,
                           std::optional<long> row = std::nullopt)
      : std::invalid_argument(format(message, field, row)),
        detail_(message),
        field_(std::move(field)),
        row_(row) {}

  const std::string& detail() const noexcept { return detail_; }
  const std::optional<std::string>& field() const noexcept { return field_; }
  std::optional<long> row() const noexcept { return row_; }

 private:
  static std::string format(const std::string& message,
                            const std::optional<std::string>& field,
                            std::optional<long> row) {
    std::string out;
    if (row) out += "row " + std::to_string(*row) + ": ";
    if (field) out += "field '" + *field + "': ";
    return out + message;
  }

  std::string detail_;
  std::optional<std::string> field_;
  std::optional<long> row_;
};

}  // namespace metabal
