#pragma once

#include <stdexcept>
#include <string>

namespace fiberorient {

/// Invalid arguments or configuration. The CLI maps this to exit code 1.
class ArgumentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system or file format failure. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (non-finite values, degenerate data). Exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fiberorient
