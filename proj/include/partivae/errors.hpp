#pragma once

#include <stdexcept>
#include <string>

namespace partivae {

// Error taxonomy mirrors the CLI exit codes:
//   ConfigError -> 1, DataError -> 2, NumericError -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad usage, bad configuration, or a request the artifact refuses by policy.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data (datasets, model files).
struct DataError : Error {
  using Error::Error;
};

// Numeric failure at runtime (non-finite values, invalid parameters).
struct NumericError : Error {
  using Error::Error;
};

// Exhaustive computation requested beyond the supported state-space caps.
struct CapacityError : ConfigError {
  using ConfigError::ConfigError;
};

// Shape disagreement between tensors or between a model file and a target.
struct DimensionError : DataError {
  using DataError::DataError;
};

// Raised when a training step produces a non-finite objective or gradient.
struct TrainError : NumericError {
  TrainError(long step_index, const std::string& what)
      : NumericError("training aborted at step " + std::to_string(step_index) + ": " + what),
        step(step_index) {}
  long step;
};

}  // namespace partivae
