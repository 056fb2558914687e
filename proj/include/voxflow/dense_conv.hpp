#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "voxflow/conv_spec.hpp"
#include "voxflow/sparse_tensor.hpp"

// Reference dense convolution evaluated by direct nested loops in double
// precision: out[i] = sum over offsets of in[stride * i + delta] * W_delta,
// with implicit zeros outside the grid. Used as the oracle the sparse
// dataflows are checked against; it shares no code with the kernel-map path.

namespace voxflow {

template <typename T, std::size_t Dim>
struct DenseGrid {
  Coord<Dim> lo{};
  std::array<std::int32_t, Dim> extent{};
  Matrix<T> values;  // cell-major rows, last axis fastest

  std::int64_t cell_count() const {
    std::int64_t n = 1;
    for (std::size_t d = 0; d < Dim; ++d) n *= extent[d];
    return n;
  }

  std::int64_t index_of(const Coord<Dim>& c) const {
    std::int64_t idx = 0;
    for (std::size_t d = 0; d < Dim; ++d) {
      const std::int64_t rel = std::int64_t(c[d]) - lo[d];
      if (rel < 0 || rel >= extent[d]) return -1;
      idx = idx * extent[d] + rel;
    }
    return idx;
  }
};

template <typename T, std::size_t Dim>
DenseGrid<T, Dim> densify(const SparseTensor<T, Dim>& x) {
  DenseGrid<T, Dim> grid;
  if (x.coords.empty()) {
    grid.extent.fill(0);
    grid.values.resize(0, x.features.cols());
    return grid;
  }
  Coord<Dim> hi = x.coords.front();
  grid.lo = x.coords.front();
  for (const auto& c : x.coords)
    for (std::size_t d = 0; d < Dim; ++d) {
      grid.lo[d] = std::min(grid.lo[d], c[d]);
      hi[d] = std::max(hi[d], c[d]);
    }
  for (std::size_t d = 0; d < Dim; ++d) grid.extent[d] = hi[d] - grid.lo[d] + 1;
  grid.values = Matrix<T>::Zero(grid.cell_count(), x.features.cols());
  for (std::size_t i = 0; i < x.coords.size(); ++i)
    grid.values.row(grid.index_of(x.coords[i])) = x.features.row(Eigen::Index(i));
  return grid;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return floor_div(a + b - 1, b); }

template <typename T, std::size_t Dim>
DenseGrid<double, Dim> dense_conv(const DenseGrid<T, Dim>& in, const ConvSpec<T, Dim>& spec) {
  spec.validate();
  if (in.values.cols() != spec.in_channels)
    throw InvalidSpec("dense input channel width does not match spec");

  DenseGrid<double, Dim> out;
  bool empty = false;
  for (std::size_t d = 0; d < Dim; ++d) {
    std::int32_t off_min = std::numeric_limits<std::int32_t>::max();
    std::int32_t off_max = std::numeric_limits<std::int32_t>::min();
    for (const auto& off : spec.offsets.offsets) {
      off_min = std::min(off_min, off[d]);
      off_max = std::max(off_max, off[d]);
    }
    // all i with stride * i + delta inside the input box for some delta
    const std::int64_t i_min = ceil_div(std::int64_t(in.lo[d]) - off_max, spec.stride);
    const std::int64_t i_max =
        floor_div(std::int64_t(in.lo[d]) + in.extent[d] - 1 - off_min, spec.stride);
    if (i_max < i_min) {
      empty = true;
      break;
    }
    out.lo[d] = std::int32_t(i_min);
    out.extent[d] = std::int32_t(i_max - i_min + 1);
  }
  if (empty || in.cell_count() == 0) {
    out.extent.fill(0);
    out.values.resize(0, spec.out_channels);
    return out;
  }

  std::vector<Matrix<double>> wd;
  wd.reserve(spec.weights.size());
  for (const auto& w : spec.weights) wd.push_back(w.template cast<double>());

  out.values = Matrix<double>::Zero(out.cell_count(), spec.out_channels);
  Coord<Dim> i = out.lo;
  for (std::int64_t row = 0; row < out.cell_count(); ++row) {
    for (int b = 0; b < spec.num_offsets(); ++b) {
      Coord<Dim> src;
      for (std::size_t d = 0; d < Dim; ++d)
        src[d] = i[d] * spec.stride + spec.offsets.offsets[std::size_t(b)][d];
      const std::int64_t idx = in.index_of(src);
      if (idx < 0) continue;
      out.values.row(row) +=
          in.values.row(idx).template cast<double>() * wd[std::size_t(b)];
    }
    for (int d = int(Dim) - 1; d >= 0; --d) {
      const std::size_t ud = std::size_t(d);
      if (++i[ud] < out.lo[ud] + out.extent[ud]) break;
      i[ud] = out.lo[ud];
    }
  }
  return out;
}

// Max over occupied sparse rows of |sparse - dense| / max(1, |sparse|, |dense|).
// Dense cells the sparse output set omits are ignored.
template <typename T, std::size_t Dim>
double deviation_vs_dense(const SparseTensor<T, Dim>& sparse, const DenseGrid<double, Dim>& dense) {
  double worst = 0.0;
  for (std::size_t i = 0; i < sparse.coords.size(); ++i) {
    const std::int64_t idx = dense.index_of(sparse.coords[i]);
    for (int c = 0; c < sparse.channels(); ++c) {
      const double a = double(sparse.features(Eigen::Index(i), c));
      const double b = idx < 0 ? 0.0 : dense.values(idx, c);
      const double denom = std::max({1.0, std::abs(a), std::abs(b)});
      worst = std::max(worst, std::abs(a - b) / denom);
    }
  }
  return worst;
}

}  // namespace voxflow
