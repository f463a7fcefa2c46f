#pragma once

#include "tse/tensor.hpp"

namespace tse {

// Binary indicator of observed entries: 1 observed, 0 missing. Same shape as
// the feature matrices it masks.
struct Mask {
  Matrix M;

  bool observed(std::size_t r, std::size_t c) const { return M(r, c) != 0.0; }

  static Mask ones(std::size_t rows, std::size_t cols) {
    return Mask{Matrix(rows, cols, 1.0)};
  }
};

}  // namespace tse
