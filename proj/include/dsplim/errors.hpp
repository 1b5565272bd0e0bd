#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsplim {

/// Argument outside a function's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical failure: quadrature did not converge, a CDF left [0, 1] by more
/// than rounding, a root could not be bracketed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The combined plausibility does not decay, so no density exists and the
/// upper limit is +infinity.
class UnboundedLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EnumerationTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoPosteriorMass : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed or invalid dataset input; carries a 1-based location.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace dsplim
