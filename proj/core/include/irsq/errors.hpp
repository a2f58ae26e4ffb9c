#pragma once

#include <stdexcept>
#include <string>

namespace irsq {

/// A solver ran but could not deliver a trustworthy result. Configuration
/// mistakes are reported as std::invalid_argument instead.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace irsq
