#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "voxflow/error.hpp"

namespace voxflow {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <std::size_t Dim>
using Coord = std::array<std::int32_t, Dim>;

template <std::size_t Dim>
struct CoordHash {
  std::size_t operator()(const Coord<Dim>& c) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::size_t d = 0; d < Dim; ++d) {
      h ^= std::uint64_t(std::uint32_t(c[d])) * 0xff51afd7ed558ccdull;
      h = (h ^ (h >> 33)) * 0xc4ceb9fe1a85ec53ull;
    }
    return std::size_t(h ^ (h >> 29));
  }
};

// Deduplicated, lexicographically sorted integer cell coordinates paired with
// one feature row per cell. The stride records the cumulative coordinate
// downsampling along a convolution chain.
template <typename T, std::size_t Dim>
struct SparseTensor {
  std::vector<Coord<Dim>> coords;
  Matrix<T> features;
  std::int32_t stride = 1;

  std::int64_t rows() const { return std::int64_t(coords.size()); }
  int channels() const { return int(features.cols()); }

  void validate() const {
    if (features.rows() != rows())
      throw InvalidTensor("feature row count does not match coordinate count");
    if (stride < 1) throw InvalidTensor("tensor stride must be positive");
    for (std::size_t i = 1; i < coords.size(); ++i) {
      if (coords[i - 1] == coords[i]) throw InvalidTensor("duplicate coordinates");
      if (coords[i] < coords[i - 1]) throw InvalidTensor("coordinates not sorted");
    }
  }
};

// Builds a canonical tensor from rows in arbitrary order.
template <typename T, std::size_t Dim>
SparseTensor<T, Dim> make_sorted_tensor(std::vector<Coord<Dim>> coords, Matrix<T> features,
                                        std::int32_t stride = 1) {
  if (features.rows() != std::int64_t(coords.size()))
    throw InvalidTensor("feature row count does not match coordinate count");
  std::vector<std::int32_t> perm(coords.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(),
            [&](std::int32_t a, std::int32_t b) { return coords[a] < coords[b]; });
  SparseTensor<T, Dim> out;
  out.stride = stride;
  out.coords.resize(coords.size());
  out.features.resize(features.rows(), features.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    out.coords[i] = coords[perm[i]];
    out.features.row(Eigen::Index(i)) = features.row(perm[i]);
  }
  out.validate();
  return out;
}

}  // namespace voxflow
