#pragma once

#include <stdexcept>
#include <string>

namespace laf {

// Base for every error the library raises. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape or channel-count mismatch; the message names the dimension.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedKernelError : public Error {
 public:
  using Error::Error;
};

// Invalid ArchConfig or config file; the message names the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Invalid Wise-IoU state (non-positive running mean, empty batch).
class StateError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace laf
