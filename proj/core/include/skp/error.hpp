#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace skp {

/// Bad input value or configuration (maps to CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operator kind not available for the chosen correlation model.
class UnsupportedOperator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base class of numerical failures (maps to CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FactorizationError : public NumericalError {
 public:
  FactorizationError(const std::string& what, std::size_t pivot)
      : NumericalError(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class EstimationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InvalidArgument("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace skp
