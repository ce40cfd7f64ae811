#pragma once

#include <stdexcept>
#include <string>

namespace kslab {

/// An iterative or Newton solve did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Clipping removed more mass in one step than the configured tolerance.
class PositivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kslab
