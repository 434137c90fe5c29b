#pragma once

#include <cmath>

namespace hybridmap {

/// Numerically stable logistic sigmoid.
template <typename S>
inline S sigmoid(S x) {
  if (x >= S(0)) {
    return S(1) / (S(1) + std::exp(-x));
  }
  const S e = std::exp(x);
  return e / (S(1) + e);
}

}  // namespace hybridmap
