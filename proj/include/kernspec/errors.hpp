#pragma once

#include <stdexcept>
#include <string>

namespace kernspec {

/// Invalid user input or a violated precondition on a kernel/study
/// specification. The CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed (non-convergence, rank deficiency, NaN
/// entries). The CLI maps it to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kernspec
