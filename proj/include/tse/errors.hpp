#pragma once

#include <stdexcept>
#include <string>

namespace tse {

// Error categories map onto CLI exit codes: validation 1, divergence 2, io 3.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tse
