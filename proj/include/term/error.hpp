#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace term {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input (bad dimensions, non-finite values,
/// invalid configuration, unreadable files).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public InputError {
 public:
  using InputError::InputError;
};

/// A numerical procedure failed to produce a usable result.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Optimizer objective blew past the divergence guard.
class DivergedError : public NumericalError {
 public:
  DivergedError(const std::string& what, std::vector<double> last_iterate,
                int iteration)
      : NumericalError(what),
        last_iterate_(std::move(last_iterate)),
        iteration_(iteration) {}

  const std::vector<double>& last_iterate() const noexcept {
    return last_iterate_;
  }
  int iteration() const noexcept { return iteration_; }

 private:
  std::vector<double> last_iterate_;
  int iteration_;
};

}  // namespace term
