#pragma once

#include <stdexcept>

namespace gpursuit {

// Invalid configuration or argument contract violation.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Two paths mapped to the same dictionary grid cell. The caller may
// regenerate the path set and retry.
struct GridCollisionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value encountered inside an iterative solver.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace gpursuit
