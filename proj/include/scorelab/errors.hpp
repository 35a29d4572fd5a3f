#pragma once

#include <stdexcept>

namespace scorelab {

// Shape or contract violation between tensors / model parts.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside its mathematical domain (e.g. t outside [0, T]).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Bad configuration value or CLI usage.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Requested oracle/operation is not defined for the given inputs.
struct UnsupportedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite values or a failed numerical procedure.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed file payload (checkpoint, IDX, codes CSV).
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace scorelab
