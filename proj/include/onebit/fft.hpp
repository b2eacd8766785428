#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "onebit/array3.hpp"

namespace onebit::fft {

enum class Direction { Forward, Inverse };  // Forward uses exp(-j...), neither is normalized

/// Batched in-place 1-D transforms of length n. Element i of batch b lives at
/// data[b * dist + i * stride].
void transform_many(cplx* data, std::size_t n, std::size_t howmany, std::size_t stride, std::size_t dist,
                    Direction dir);

inline void transform(std::span<cplx> data, Direction dir = Direction::Forward) {
  transform_many(data.data(), data.size(), 1, 1, data.size(), dir);
}

inline std::vector<cplx> forward(std::vector<cplx> data) {
  transform(data, Direction::Forward);
  return data;
}

}  // namespace onebit::fft
