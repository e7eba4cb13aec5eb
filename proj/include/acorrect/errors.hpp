#pragma once

#include <stdexcept>

namespace acorrect {

/// Invalid command-line usage or parameter ranges (exit code 2).
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Missing, unreadable or inconsistent input data (exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite losses or gradients (exit code 4).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace acorrect
