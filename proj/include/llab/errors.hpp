#pragma once

#include <stdexcept>
#include <string>

namespace llab {

// Raised when a loss or metric evaluation produces a non-finite value.
// Training loops catch this to halt cleanly instead of propagating NaNs.
struct OverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed on-disk artifact (checkpoint, dataset file).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace llab
