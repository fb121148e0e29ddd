#pragma once

#include <stdexcept>
#include <string>

namespace fgmrisk {

/// Invalid input: out-of-range parameter, violated precondition.
/// `field()` names the offending parameter when there is one.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& message, std::string field = {})
      : std::invalid_argument(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// The inputs are valid but outside the regime a closed form covers
/// (e.g. a discriminant hypothesis does not hold).
class UnsupportedRegimeError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

/// A solver failed: singular system, missing roots, non-convergence.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& message, double condition = 0.0)
      : std::runtime_error(message), condition_(condition) {}

  /// Condition estimate of the offending system, 0 when not applicable.
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

namespace detail {

inline void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ParameterError(message, field);
}

}  // namespace detail
}  // namespace fgmrisk
