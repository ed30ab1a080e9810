// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace collatz {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration (maps to CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// 64-bit intermediate would wrap.
class OverflowError : public Error {
 public:
  explicit OverflowError(std::uint64_t value)
      : Error("3n+1 overflows 64 bits at n=" + std::to_string(value)), value_(value) {}
  std::uint64_t value() const noexcept { return value_; }

 private:
  std::uint64_t value_;
};

/// Trajectory did not reach 1 within the step budget.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(std::uint64_t n, std::uint64_t max_steps)
      : Error("trajectory of n=" + std::to_string(n) + " did not reach 1 within " +
              std::to_string(max_steps) + " steps"),
        n_(n),
        max_steps_(max_steps) {}
  std::uint64_t n() const noexcept { return n_; }
  std::uint64_t max_steps() const noexcept { return max_steps_; }

 private:
  std::uint64_t n_;
  std::uint64_t max_steps_;
};

/// Log density evaluated to NaN or an infinity where a finite value is required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// MCMC convergence gates (split R-hat, ESS) failed (CLI exit code 3).
class DiagnosticsError : public Error {
 public:
  using Error::Error;
};

/// A pipeline step's input artifact is missing (CLI exit code 4).
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written, or is malformed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace collatz
