#pragma once

#include <stdexcept>
#include <string>

namespace pedghmm {

/// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or invalid input: files, arguments, stale deltas.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Parse failure with line context.
class ParseError : public InputError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A domain invariant would be violated.
class InvariantError : public InputError {
 public:
  using InputError::InputError;
};

class OutOfBoundsError : public InputError {
 public:
  using InputError::InputError;
};

/// A topology delta does not match the state it is applied to.
class StaleDeltaError : public InputError {
 public:
  using InputError::InputError;
};

/// Numerical failure (underflow, degenerate distributions).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Filtering produced a belief with no usable mass.
class DegenerateBeliefError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace pedghmm
