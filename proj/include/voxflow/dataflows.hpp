#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "voxflow/kernel_map.hpp"

// The four interchangeable convolution dataflows. All execute the same kernel
// map and produce the same result up to floating-point summation order; they
// differ only in traversal and grouping. Accumulation is double precision,
// outputs are stored in the tensor's scalar type.

namespace voxflow {

enum class Dataflow { GatherScatter, FetchOnDemand, GroupedSymmetric, ImplicitSorted };

inline constexpr std::array<Dataflow, 4> kAllDataflows = {
    Dataflow::GatherScatter, Dataflow::FetchOnDemand, Dataflow::GroupedSymmetric,
    Dataflow::ImplicitSorted};

inline const char* dataflow_name(Dataflow f) {
  switch (f) {
    case Dataflow::GatherScatter: return "gather_scatter";
    case Dataflow::FetchOnDemand: return "fetch_on_demand";
    case Dataflow::GroupedSymmetric: return "grouped_symmetric";
    case Dataflow::ImplicitSorted: return "implicit_sorted";
  }
  return "unknown";
}

inline std::optional<Dataflow> dataflow_from_name(const std::string& name) {
  for (Dataflow f : kAllDataflows)
    if (name == dataflow_name(f)) return f;
  return std::nullopt;
}

namespace detail {

template <typename T, std::size_t Dim>
void validate_conv_args(const SparseTensor<T, Dim>& x, const ConvSpec<T, Dim>& spec,
                        const KernelMap<Dim>& map) {
  spec.validate();
  x.validate();
  if (x.channels() != spec.in_channels)
    throw InvalidSpec("input feature width does not match spec in_channels");
  if (map.pairs.size() != std::size_t(spec.num_offsets()))
    throw InconsistentMap("kernel map offset count does not match spec");
  const std::int64_t in_rows = x.rows();
  const std::int64_t out_rows = std::int64_t(map.out_coords.size());
  for (const auto& list : map.pairs)
    for (const auto& p : list)
      if (p.in_row < 0 || p.in_row >= in_rows || p.out_row < 0 || p.out_row >= out_rows)
        throw InconsistentMap("kernel map row index out of range");
}

template <typename T, std::size_t Dim>
std::vector<Matrix<double>> weights_as_double(const ConvSpec<T, Dim>& spec) {
  std::vector<Matrix<double>> wd;
  wd.reserve(spec.weights.size());
  for (const auto& w : spec.weights) wd.push_back(w.template cast<double>());
  return wd;
}

template <typename T, std::size_t Dim>
SparseTensor<T, Dim> finish_output(const SparseTensor<T, Dim>& x, const ConvSpec<T, Dim>& spec,
                                   const KernelMap<Dim>& map, const Matrix<double>& acc) {
  SparseTensor<T, Dim> out;
  out.coords = map.out_coords;
  out.features = acc.template cast<T>();
  out.stride = x.stride * spec.stride;
  return out;
}

}  // namespace detail

// Per offset: gather the named input rows into a dense matrix, multiply by
// the offset's weights, scatter-add into the output rows.
template <typename T, std::size_t Dim>
SparseTensor<T, Dim> conv_gather_scatter(const SparseTensor<T, Dim>& x,
                                         const ConvSpec<T, Dim>& spec,
                                         const KernelMap<Dim>& map) {
  detail::validate_conv_args(x, spec, map);
  Matrix<double> acc =
      Matrix<double>::Zero(std::int64_t(map.out_coords.size()), spec.out_channels);
  for (int b = 0; b < spec.num_offsets(); ++b) {
    const auto& list = map.pairs[std::size_t(b)];
    if (list.empty()) continue;
    Matrix<double> gathered(std::int64_t(list.size()), spec.in_channels);
    for (std::size_t k = 0; k < list.size(); ++k)
      gathered.row(Eigen::Index(k)) = x.features.row(list[k].in_row).template cast<double>();
    const Matrix<double> product =
        gathered * spec.weights[std::size_t(b)].template cast<double>();
    for (std::size_t k = 0; k < list.size(); ++k)
      acc.row(list[k].out_row) += product.row(Eigen::Index(k));
  }
  return detail::finish_output(x, spec, map, acc);
}

// Output-stationary traversal: every output row walks its existing neighbors
// and accumulates input * W_delta directly, with no staging buffers.
template <typename T, std::size_t Dim>
SparseTensor<T, Dim> conv_fetch_on_demand(const SparseTensor<T, Dim>& x,
                                          const ConvSpec<T, Dim>& spec,
                                          const KernelMap<Dim>& map) {
  detail::validate_conv_args(x, spec, map);
  const std::int64_t out_rows = std::int64_t(map.out_coords.size());
  const auto wd = detail::weights_as_double(spec);

  // CSR adjacency over outputs; per-output neighbors stay in offset order
  std::vector<std::int64_t> start(std::size_t(out_rows) + 1, 0);
  for (const auto& list : map.pairs)
    for (const auto& p : list) ++start[std::size_t(p.out_row) + 1];
  for (std::size_t i = 1; i < start.size(); ++i) start[i] += start[i - 1];
  std::vector<std::int32_t> nb_offset(std::size_t(map.total_pairs()));
  std::vector<std::int32_t> nb_in(nb_offset.size());
  {
    std::vector<std::int64_t> cursor(start.begin(), start.end() - 1);
    for (std::size_t b = 0; b < map.pairs.size(); ++b)
      for (const auto& p : map.pairs[b]) {
        const std::int64_t slot = cursor[std::size_t(p.out_row)]++;
        nb_offset[std::size_t(slot)] = std::int32_t(b);
        nb_in[std::size_t(slot)] = p.in_row;
      }
  }

  Matrix<double> acc = Matrix<double>::Zero(out_rows, spec.out_channels);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (out_rows > 1024)
#endif
  for (std::int64_t i = 0; i < out_rows; ++i) {
    Eigen::Matrix<double, 1, Eigen::Dynamic> row =
        Eigen::Matrix<double, 1, Eigen::Dynamic>::Zero(spec.out_channels);
    for (std::int64_t k = start[std::size_t(i)]; k < start[std::size_t(i) + 1]; ++k)
      row.noalias() += x.features.row(nb_in[std::size_t(k)]).template cast<double>() *
                       wd[std::size_t(nb_offset[std::size_t(k)])];
    acc.row(i) = row;
  }
  return detail::finish_output(x, spec, map, acc);
}

template <typename T, std::size_t Dim>
struct GroupedResult {
  SparseTensor<T, Dim> output;
  bool fell_back = false;  // spec was not stride-1 odd-K; ran gather-scatter
  int weight_groups = 0;
};

// Mirrored offsets (delta, -delta) have equal-size pair lists for stride-1
// odd kernels, so each pair is processed as one batched multiply of a shared
// gathered matrix against the two weight matrices; the center offset runs
// alone.
template <typename T, std::size_t Dim>
GroupedResult<T, Dim> conv_grouped_symmetric(const SparseTensor<T, Dim>& x,
                                             const ConvSpec<T, Dim>& spec,
                                             const KernelMap<Dim>& map) {
  if (spec.stride != 1 || spec.kernel_size % 2 == 0)
    return {conv_gather_scatter(x, spec, map), true, spec.num_offsets()};

  detail::validate_conv_args(x, spec, map);
  const int nb = spec.num_offsets();
  const int center = spec.offsets.center_index();
  for (int b = 0; b < center; ++b)
    if (spec.offsets.offsets[std::size_t(nb - 1 - b)] != negate(spec.offsets.offsets[std::size_t(b)]))
      throw InvalidSpec("offset set is not closed under negation");

  Matrix<double> acc =
      Matrix<double>::Zero(std::int64_t(map.out_coords.size()), spec.out_channels);

  auto scatter = [&](const std::vector<typename KernelMap<Dim>::Pair>& list,
                     const Matrix<double>& product) {
    for (std::size_t k = 0; k < list.size(); ++k)
      acc.row(list[k].out_row) += product.row(Eigen::Index(k));
  };

  {
    const auto& list = map.pairs[std::size_t(center)];
    if (!list.empty()) {
      Matrix<double> gathered(std::int64_t(list.size()), spec.in_channels);
      for (std::size_t k = 0; k < list.size(); ++k)
        gathered.row(Eigen::Index(k)) = x.features.row(list[k].in_row).template cast<double>();
      scatter(list, gathered * spec.weights[std::size_t(center)].template cast<double>());
    }
  }

  for (int b = 0; b < center; ++b) {
    const int bn = nb - 1 - b;
    const auto& fwd = map.pairs[std::size_t(b)];
    const auto& rev = map.pairs[std::size_t(bn)];
    if (fwd.size() != rev.size())
      throw InconsistentMap("mirrored offsets have unequal pair lists");
    const std::int64_t m = std::int64_t(fwd.size());
    if (m == 0) continue;
    Matrix<double> gathered(2 * m, spec.in_channels);
    for (std::int64_t k = 0; k < m; ++k)
      gathered.row(k) = x.features.row(fwd[std::size_t(k)].in_row).template cast<double>();
    for (std::int64_t k = 0; k < m; ++k)
      gathered.row(m + k) = x.features.row(rev[std::size_t(k)].in_row).template cast<double>();
    scatter(fwd, gathered.topRows(m) * spec.weights[std::size_t(b)].template cast<double>());
    scatter(rev, gathered.bottomRows(m) * spec.weights[std::size_t(bn)].template cast<double>());
  }

  return {detail::finish_output(x, spec, map, acc), false, center + 1};
}

struct ImplicitStats {
  std::int64_t padded_macs_sorted = 0;
  std::int64_t padded_macs_unsorted = 0;
  std::int64_t exact_macs = 0;
  std::int32_t group_size = 0;
  std::int32_t groups = 0;
};

template <typename T, std::size_t Dim>
struct ImplicitResult {
  SparseTensor<T, Dim> output;
  ImplicitStats stats;
};

// Implicit-GEMM execution: outputs sorted by neighbor bitmask (as numbers,
// descending), partitioned into consecutive groups, each group evaluating the
// union of its members' offsets with zero rows standing in for absent
// neighbors. Padded MAC counts are reported for the sorted and the original
// row order.
template <typename T, std::size_t Dim>
ImplicitResult<T, Dim> conv_implicit_sorted(const SparseTensor<T, Dim>& x,
                                            const ConvSpec<T, Dim>& spec,
                                            const KernelMap<Dim>& map, int group_size) {
  if (group_size < 1) throw InvalidSpec("group size must be >= 1");
  detail::validate_conv_args(x, spec, map);
  const std::int64_t out_rows = std::int64_t(map.out_coords.size());
  const int nb = spec.num_offsets();

  const std::vector<NeighborMask> masks = build_bitmasks(map);
  std::vector<std::int32_t> neighbor(std::size_t(out_rows) * std::size_t(nb), -1);
  for (int b = 0; b < nb; ++b)
    for (const auto& p : map.pairs[std::size_t(b)])
      neighbor[std::size_t(p.out_row) * std::size_t(nb) + std::size_t(b)] = p.in_row;

  std::vector<std::int32_t> sorted(static_cast<std::size_t>(out_rows));
  std::iota(sorted.begin(), sorted.end(), 0);
  std::sort(sorted.begin(), sorted.end(), [&](std::int32_t a, std::int32_t b2) {
    const int c = compare_masks(masks[std::size_t(a)], masks[std::size_t(b2)]);
    return c != 0 ? c > 0 : a < b2;
  });

  auto padded_macs = [&](const std::vector<std::int32_t>& order) {
    std::int64_t units = 0;
    for (std::int64_t g0 = 0; g0 < out_rows; g0 += group_size) {
      const std::int64_t len = std::min<std::int64_t>(group_size, out_rows - g0);
      NeighborMask u(nb);
      for (std::int64_t k = 0; k < len; ++k)
        u.or_with(masks[std::size_t(order[std::size_t(g0 + k)])]);
      units += len * u.popcount();
    }
    return units * spec.in_channels * spec.out_channels;
  };

  ImplicitStats stats;
  stats.group_size = group_size;
  stats.groups = std::int32_t((out_rows + group_size - 1) / group_size);
  stats.exact_macs = map.total_pairs() * spec.in_channels * spec.out_channels;
  stats.padded_macs_sorted = padded_macs(sorted);
  {
    std::vector<std::int32_t> identity(static_cast<std::size_t>(out_rows));
    std::iota(identity.begin(), identity.end(), 0);
    stats.padded_macs_unsorted = padded_macs(identity);
  }

  const auto wd = detail::weights_as_double(spec);
  Matrix<double> acc = Matrix<double>::Zero(out_rows, spec.out_channels);
  for (std::int64_t g0 = 0; g0 < out_rows; g0 += group_size) {
    const std::int64_t len = std::min<std::int64_t>(group_size, out_rows - g0);
    NeighborMask u(nb);
    for (std::int64_t k = 0; k < len; ++k)
      u.or_with(masks[std::size_t(sorted[std::size_t(g0 + k)])]);
    Matrix<double> gathered(len, spec.in_channels);
    for (int b = 0; b < nb; ++b) {
      if (!u.test(b)) continue;
      for (std::int64_t k = 0; k < len; ++k) {
        const std::int32_t row = sorted[std::size_t(g0 + k)];
        const std::int32_t j = neighbor[std::size_t(row) * std::size_t(nb) + std::size_t(b)];
        if (j >= 0)
          gathered.row(k) = x.features.row(j).template cast<double>();
        else
          gathered.row(k).setZero();  // the padding
      }
      const Matrix<double> product = gathered * wd[std::size_t(b)];
      for (std::int64_t k = 0; k < len; ++k)
        acc.row(sorted[std::size_t(g0 + k)]) += product.row(k);
    }
  }
  return {detail::finish_output(x, spec, map, acc), stats};
}

// Dispatch used by the autotuner and the benchmark harness.
template <typename T, std::size_t Dim>
SparseTensor<T, Dim> run_dataflow(Dataflow flow, const SparseTensor<T, Dim>& x,
                                  const ConvSpec<T, Dim>& spec, const KernelMap<Dim>& map,
                                  int group_size = 32) {
  switch (flow) {
    case Dataflow::GatherScatter: return conv_gather_scatter(x, spec, map);
    case Dataflow::FetchOnDemand: return conv_fetch_on_demand(x, spec, map);
    case Dataflow::GroupedSymmetric: return conv_grouped_symmetric(x, spec, map).output;
    case Dataflow::ImplicitSorted: return conv_implicit_sorted(x, spec, map, group_size).output;
  }
  throw InvalidSpec("unknown dataflow");
}

// Max over entries of |a - b| / max(1, |a|, |b|). Requires identical
// coordinate sets.
template <typename T, std::size_t Dim>
double max_rel_deviation(const SparseTensor<T, Dim>& a, const SparseTensor<T, Dim>& b) {
  if (a.coords != b.coords) throw InconsistentMap("tensors have different coordinate sets");
  if (a.features.rows() != b.features.rows() || a.features.cols() != b.features.cols())
    throw InconsistentMap("tensors have different feature shapes");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.features.rows(); ++i)
    for (Eigen::Index c = 0; c < a.features.cols(); ++c) {
      const double av = double(a.features(i, c));
      const double bv = double(b.features(i, c));
      const double denom = std::max({1.0, std::abs(av), std::abs(bv)});
      worst = std::max(worst, std::abs(av - bv) / denom);
    }
  return worst;
}

}  // namespace voxflow
