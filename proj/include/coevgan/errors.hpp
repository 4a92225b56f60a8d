#ifndef COEVGAN_ERRORS_HPP
#define COEVGAN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace coevgan {

// Bad user-supplied configuration or violated operation precondition.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure during a training run (non-finite parameters, dead cell, ...).
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical breakdown outside tolerated roundoff (e.g. indefinite covariance).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coevgan

#endif  // COEVGAN_ERRORS_HPP
