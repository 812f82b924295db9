#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace oucv {

/// Broad error classes; the CLI maps these onto exit codes 1, 2 and 3.
enum class ErrorKind { Domain, Io, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Short machine-readable tag, e.g. "invalid_design".
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

/// Design validation failure. `index` is the 1-based position of the first
/// offending point when one can be named.
class InvalidDesign : public Error {
 public:
  explicit InvalidDesign(const std::string& message,
                         std::optional<std::size_t> index = std::nullopt)
      : Error(ErrorKind::Domain, "invalid_design", message), index_(index) {}

  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  std::optional<std::size_t> index_;
};

class InvalidParameter : public Error {
 public:
  explicit InvalidParameter(const std::string& message)
      : Error(ErrorKind::Domain, "invalid_parameter", message) {}
};

class OverflowGuard : public Error {
 public:
  explicit OverflowGuard(const std::string& message)
      : Error(ErrorKind::Domain, "overflow", message) {}
};

class LinearDependence : public Error {
 public:
  explicit LinearDependence(const std::string& message)
      : Error(ErrorKind::Domain, "linear_dependence", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorKind::Io, "io_error", message) {}
};

class ConditioningError : public Error {
 public:
  explicit ConditioningError(const std::string& message)
      : Error(ErrorKind::Numerical, "ill_conditioned", message) {}
};

/// Nonfinite objective or similar breakdown. Carries the parameter value at
/// which it happened when known.
class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& message,
                            std::optional<double> theta = std::nullopt)
      : Error(ErrorKind::Numerical, "numerical_failure", message), theta_(theta) {}

  std::optional<double> theta() const noexcept { return theta_; }

 private:
  std::optional<double> theta_;
};

}  // namespace oucv
