#pragma once

#include <cstdint>
#include <vector>

#include "voxflow/sparse_tensor.hpp"

namespace voxflow {

// Ordered kernel offset set. Odd kernels are centered (components in
// [-(K-1)/2, (K-1)/2]); even kernels use non-negative components [0, K-1].
// Offsets are listed in ascending lexicographic order, so for odd K the set
// reverses under negation: offsets[n-1-b] == -offsets[b].
template <std::size_t Dim>
struct OffsetSet {
  int kernel_size = 1;
  std::vector<Coord<Dim>> offsets;

  int size() const { return int(offsets.size()); }
  int center_index() const { return (size() - 1) / 2; }
};

template <std::size_t Dim>
OffsetSet<Dim> enumerate_offsets(int kernel_size) {
  static_assert(Dim >= 1);
  if (kernel_size < 1) throw InvalidSpec("kernel size must be >= 1");
  std::int64_t volume = 1;
  for (std::size_t d = 0; d < Dim; ++d) {
    volume *= kernel_size;
    if (volume > (std::int64_t(1) << 24)) throw InvalidSpec("kernel volume too large");
  }
  const std::int32_t lo = kernel_size % 2 == 1 ? -(kernel_size - 1) / 2 : 0;
  const std::int32_t hi = lo + kernel_size - 1;

  OffsetSet<Dim> set;
  set.kernel_size = kernel_size;
  set.offsets.reserve(std::size_t(volume));
  Coord<Dim> cur;
  cur.fill(lo);
  while (true) {
    set.offsets.push_back(cur);
    int d = int(Dim) - 1;
    for (; d >= 0; --d) {
      if (++cur[std::size_t(d)] <= hi) break;
      cur[std::size_t(d)] = lo;
    }
    if (d < 0) break;
  }
  return set;
}

template <std::size_t Dim>
Coord<Dim> negate(const Coord<Dim>& c) {
  Coord<Dim> out;
  for (std::size_t d = 0; d < Dim; ++d) out[d] = -c[d];
  return out;
}

}  // namespace voxflow
