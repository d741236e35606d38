#pragma once

#include <stdexcept>

namespace moco {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: config/usage -> 2, io/format -> 3, numerical failure -> 4.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CalibrationError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace moco
