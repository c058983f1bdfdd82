#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scaleinv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible range (e.g. alpha <= 9/8, |g| > 1).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace scaleinv
