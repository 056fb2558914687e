#pragma once

#include <vector>

#include "voxflow/dataflows.hpp"
#include "voxflow/timing.hpp"

namespace voxflow {

struct AutotuneEntry {
  Dataflow flow;
  TimingStats timing;
};

struct AutotuneResult {
  Dataflow chosen;
  std::vector<AutotuneEntry> table;
};

// Dataflows that run as themselves for the spec. Grouped-symmetric only
// applies at stride 1 with an odd kernel; elsewhere it would just repeat
// gather-scatter.
template <typename T, std::size_t Dim>
std::vector<Dataflow> applicable_dataflows(const ConvSpec<T, Dim>& spec) {
  std::vector<Dataflow> flows;
  for (Dataflow f : kAllDataflows) {
    if (f == Dataflow::GroupedSymmetric && (spec.stride != 1 || spec.kernel_size % 2 == 0))
      continue;
    flows.push_back(f);
  }
  return flows;
}

// Times each candidate dataflow on the calibration input (median of
// `repeats`, warm-up discarded) and picks the fastest; ties break toward the
// fixed dataflow ordering.
template <typename T, std::size_t Dim>
AutotuneResult autotune(const ConvSpec<T, Dim>& spec, const SparseTensor<T, Dim>& calibration,
                        int repeats, std::vector<Dataflow> candidates = {}, int group_size = 32) {
  if (repeats < 1) throw InvalidSpec("autotune repeats must be >= 1");
  if (candidates.empty()) candidates = applicable_dataflows(spec);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const auto out = output_coords(calibration.coords, spec);
  const KernelMap<Dim> map = build_kernel_map(calibration.coords, out, spec);

  AutotuneResult result;
  result.table.reserve(candidates.size());
  for (Dataflow f : candidates) {
    const TimingStats stats = measure(
        [&] { (void)run_dataflow(f, calibration, spec, map, group_size); }, repeats);
    result.table.push_back({f, stats});
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.table.size(); ++i)
    if (result.table[i].timing.median_s < result.table[best].timing.median_s) best = i;
  result.chosen = result.table[best].flow;
  return result;
}

}  // namespace voxflow
