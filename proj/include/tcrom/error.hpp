#pragma once

#include <stdexcept>
#include <string>

namespace tcrom {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad input: shapes, ranges, malformed files, inconsistent configs.
struct ValidationError : Error {
  using Error::Error;
};

/// Numerical blow-up: NaN/Inf detected during training or rollout.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace tcrom
