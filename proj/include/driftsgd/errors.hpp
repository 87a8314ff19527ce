#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace driftsgd {

// Base of every error the library throws. Callers that only care about
// "did it work" catch this; the subclasses name the failure category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or a precondition the caller violated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that is well formed but semantically unusable (gaps, order).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A loss index outside what an oracle can still evaluate.
class HistoryError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Syntax error in an input file; carries the 1-based line number.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace driftsgd
