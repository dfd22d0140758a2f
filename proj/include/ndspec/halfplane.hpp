#pragma once

#include "ndspec/grid.hpp"

namespace ndspec {

// Lexicographic half-plane H_N on Z^N: k is inside iff its first nonzero
// component is positive, or k = 0. This is the N-dimensional analogue of the
// nonnegative frequencies; "analytic type" means coefficient support in H_N.
inline bool HalfplaneContains(const MultiIndex& k) {
  for (int v : k) {
    if (v > 0) return true;
    if (v < 0) return false;
  }
  return true;  // origin
}

}  // namespace ndspec
