#pragma once

#include "dense_array.hpp"
#include "rng.hpp"

namespace vcore {

/// Transformer-scale weight init shared by every learnable matrix and table.
inline constexpr double kInitStd = 0.02;

inline DenseArray normal_array(std::vector<std::size_t> shape, double stddev, Rng& rng) {
  DenseArray a(std::move(shape));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.normal(0.0, stddev);
  return a;
}

}  // namespace vcore
