#pragma once

#include <stdexcept>
#include <string>

namespace burstsr {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File or stream problems: missing paths, short reads, bad magic numbers.
struct IoError : Error {
  using Error::Error;
};

// Contradictory or out-of-range configuration, including malformed key=value files.
struct ConfigError : Error {
  using Error::Error;
};

// Singular systems, non-finite intermediates, degenerate transforms.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace burstsr
