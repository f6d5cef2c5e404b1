#pragma once

#include <stdexcept>
#include <string>

namespace clusterpdc {

/// Base of every error raised by the library. The CLI maps ConfigError to
/// exit code 2 and every other Error to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input lies outside the domain on which a model is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A computation could not produce a meaningful result (no root, empty mode
/// table, undefined estimator, inconsistent measurement).
class ComputationError : public Error {
 public:
  using Error::Error;
};

/// Calibration produced a correction that violates its invariants.
class CalibrationError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

/// Malformed or inconsistent configuration / input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace clusterpdc
