#pragma once

#include <stdexcept>

namespace starkecho {

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// trace spans too few modulation periods (or too few points) to analyze
struct ShortTraceError : TraceError {
  using TraceError::TraceError;
};

// no resolvable modulation, frequency undefined
struct NotModulatedError : TraceError {
  using TraceError::TraceError;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace starkecho
