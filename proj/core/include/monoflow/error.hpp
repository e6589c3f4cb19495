#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace monoflow {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (bad expression, wrong dimensions,
/// degenerate boxes). The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public InputError {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : InputError(what + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownSymbolError : public InputError {
 public:
  explicit UnknownSymbolError(std::string symbol)
      : InputError("unknown symbol '" + symbol + "'"), symbol_(std::move(symbol)) {}

  const std::string& symbol() const noexcept { return symbol_; }

 private:
  std::string symbol_;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

/// Failure while computing (domain errors, blow-up). CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An expression was evaluated outside its domain (division by zero, log of a
/// nonpositive number, sqrt of a negative number, non-finite result).
class DomainError : public NumericalError {
 public:
  DomainError(const std::string& what, std::string subexpression)
      : NumericalError(what + " in '" + subexpression + "'"),
        subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, double time)
      : NumericalError(what + " at t=" + std::to_string(time)), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace monoflow
