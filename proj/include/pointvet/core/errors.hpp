#pragma once

#include <stdexcept>

namespace pvet {

// Invocation problems: bad flags, unknown or malformed config keys.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Problems with input files or their contents.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Optimization blew up (non-finite loss and friends).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pvet
