#pragma once

#include <stdexcept>
#include <string>

namespace pinnse {

/// Base for every error the core raises. The C API maps subclasses onto
/// status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed grid data: duplicate slack, dangling branch, zero impedance...
class GridError : public Error {
 public:
  using Error::Error;
};

/// Case file or dataset file that cannot be parsed. Carries the line number
/// when one is known (0 otherwise).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed (Newton-Raphson or WLS). Carries the final
/// mismatch/residual norm.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during training.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace pinnse
