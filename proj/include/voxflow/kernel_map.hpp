#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "voxflow/conv_spec.hpp"
#include "voxflow/sparse_tensor.hpp"

namespace voxflow {

// Per-offset pairing of input rows to output rows. Fully determines a sparse
// convolution together with the weight bank.
template <std::size_t Dim>
struct KernelMap {
  struct Pair {
    std::int32_t in_row;
    std::int32_t out_row;
  };
  std::vector<std::vector<Pair>> pairs;  // indexed like the spec's offset list
  std::vector<Coord<Dim>> out_coords;

  std::int64_t total_pairs() const {
    std::int64_t n = 0;
    for (const auto& list : pairs) n += std::int64_t(list.size());
    return n;
  }
};

// Output coordinate set. Submanifold convolutions keep the input set; the
// generalized strided case keeps every candidate (c_in - delta) / stride with
// exact componentwise divisibility.
template <typename T, std::size_t Dim>
std::vector<Coord<Dim>> output_coords(const std::vector<Coord<Dim>>& in_coords,
                                      const ConvSpec<T, Dim>& spec) {
  spec.validate();
  if (spec.submanifold) return in_coords;
  std::unordered_set<Coord<Dim>, CoordHash<Dim>> seen;
  seen.reserve(in_coords.size() * 2);
  for (const auto& c : in_coords) {
    for (const auto& off : spec.offsets.offsets) {
      Coord<Dim> cand;
      bool ok = true;
      for (std::size_t d = 0; d < Dim; ++d) {
        const std::int32_t v = c[d] - off[d];
        if (v % spec.stride != 0) {
          ok = false;
          break;
        }
        cand[d] = v / spec.stride;
      }
      if (ok) seen.insert(cand);
    }
  }
  std::vector<Coord<Dim>> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end());
  return out;
}

// (in_row, out_row) belongs to pairs(delta) iff
// in_coord[in_row] == stride * out_coord[out_row] + delta.
template <typename T, std::size_t Dim>
KernelMap<Dim> build_kernel_map(const std::vector<Coord<Dim>>& in_coords,
                                const std::vector<Coord<Dim>>& out_coords,
                                const ConvSpec<T, Dim>& spec) {
  spec.validate();
  std::unordered_map<Coord<Dim>, std::int32_t, CoordHash<Dim>> row_of;
  row_of.reserve(in_coords.size() * 2);
  for (std::size_t i = 0; i < in_coords.size(); ++i)
    if (!row_of.emplace(in_coords[i], std::int32_t(i)).second)
      throw InvalidTensor("duplicate input coordinates");
  {
    std::unordered_set<Coord<Dim>, CoordHash<Dim>> dedup;
    dedup.reserve(out_coords.size() * 2);
    for (const auto& c : out_coords)
      if (!dedup.insert(c).second) throw InvalidTensor("duplicate output coordinates");
  }

  KernelMap<Dim> map;
  map.pairs.resize(std::size_t(spec.num_offsets()));
  map.out_coords = out_coords;
  for (std::int32_t i = 0; i < std::int32_t(out_coords.size()); ++i) {
    for (int b = 0; b < spec.num_offsets(); ++b) {
      Coord<Dim> probe;
      for (std::size_t d = 0; d < Dim; ++d)
        probe[d] = out_coords[std::size_t(i)][d] * spec.stride + spec.offsets.offsets[b][d];
      auto it = row_of.find(probe);
      if (it != row_of.end()) map.pairs[std::size_t(b)].push_back({it->second, i});
    }
  }
  return map;
}

// Swaps the input/output roles of a map; the forward pass over the result is
// the coordinate-cached transposed convolution used for upsampling.
template <std::size_t Dim>
KernelMap<Dim> transpose_kernel_map(const KernelMap<Dim>& map,
                                    std::vector<Coord<Dim>> forward_in_coords) {
  KernelMap<Dim> t;
  t.pairs.resize(map.pairs.size());
  t.out_coords = std::move(forward_in_coords);
  for (std::size_t b = 0; b < map.pairs.size(); ++b) {
    auto& list = t.pairs[b];
    list.reserve(map.pairs[b].size());
    for (const auto& p : map.pairs[b]) list.push_back({p.out_row, p.in_row});
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& c) {
      return a.out_row != c.out_row ? a.out_row < c.out_row : a.in_row < c.in_row;
    });
  }
  return t;
}

// Per-output neighbor presence mask over the kernel volume. Bit b is set iff
// pairs(offset b) targets the output. Masks compare as unsigned numbers.
struct NeighborMask {
  std::vector<std::uint64_t> words;
  int bits = 0;

  explicit NeighborMask(int nbits = 0) : words(std::size_t((nbits + 63) / 64), 0), bits(nbits) {}

  void set(int b) { words[std::size_t(b >> 6)] |= std::uint64_t(1) << (b & 63); }
  bool test(int b) const { return (words[std::size_t(b >> 6)] >> (b & 63)) & 1u; }

  int popcount() const {
    int n = 0;
    for (std::uint64_t w : words) n += std::popcount(w);
    return n;
  }

  void or_with(const NeighborMask& other) {
    for (std::size_t i = 0; i < words.size(); ++i) words[i] |= other.words[i];
  }

  friend bool operator==(const NeighborMask& a, const NeighborMask& b) {
    return a.bits == b.bits && a.words == b.words;
  }
};

// -1 / 0 / 1 for a < b / a == b / a > b, most-significant word first.
inline int compare_masks(const NeighborMask& a, const NeighborMask& b) {
  for (std::size_t i = a.words.size(); i-- > 0;) {
    if (a.words[i] != b.words[i]) return a.words[i] < b.words[i] ? -1 : 1;
  }
  return 0;
}

template <std::size_t Dim>
std::vector<NeighborMask> build_bitmasks(const KernelMap<Dim>& map) {
  const int nbits = int(map.pairs.size());
  std::vector<NeighborMask> masks(map.out_coords.size(), NeighborMask(nbits));
  for (int b = 0; b < nbits; ++b)
    for (const auto& p : map.pairs[std::size_t(b)]) masks[std::size_t(p.out_row)].set(b);
  return masks;
}

}  // namespace voxflow
