#pragma once

#include <stdexcept>
#include <string>

namespace klab {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParameterError : Error {
  using Error::Error;
};

struct InvalidInputError : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct DegenerateVectorError : Error {
  using Error::Error;
};

struct NormalizationError : Error {
  using Error::Error;
};

struct InfiniteDivergenceError : Error {
  using Error::Error;
};

struct InvalidDistributionError : Error {
  using Error::Error;
};

struct InsufficientSamplesError : Error {
  using Error::Error;
};

struct DegenerateCalibrationError : Error {
  using Error::Error;
};

struct NoPositiveSolutionError : Error {
  using Error::Error;
};

/// Raised when a training run produces a non-finite or exploding loss.
struct DivergenceError : Error {
  using Error::Error;
};

/// Config file / serialization problems.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace klab
