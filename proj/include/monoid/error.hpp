#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace monoid {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or out-of-range numeric input.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in a mode it does not support (e.g. exact ReLU
/// fed to a derivative-based routine).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Mismatched dimensions between weights, architectures or data.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed file, manifest or configuration document.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A time step could not be completed (Newton stall or singular step matrix).
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int step, double residual)
      : Error(what + " (step " + std::to_string(step) + ", residual " + format(residual) + ")"),
        step_(step),
        residual_(residual) {}

  int step() const noexcept { return step_; }
  double residual() const noexcept { return residual_; }

 private:
  static std::string format(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
  }

  int step_;
  double residual_;
};

class LineSearchError : public Error {
 public:
  LineSearchError(const std::string& what, int iteration)
      : Error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

}  // namespace monoid
