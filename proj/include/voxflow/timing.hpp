#pragma once

#include <algorithm>
#include <chrono>
#include <vector>

namespace voxflow {

inline double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct TimingStats {
  double median_s = 0.0;
  double min_s = 0.0;
  double max_s = 0.0;
  int repeats = 0;
};

// Median-of-repeats timing; an initial warm-up run is discarded when
// requested. Samples are clamped to 1 ns so derived rates stay finite.
template <typename F>
TimingStats measure(F&& fn, int repeats, bool discard_warmup = true) {
  if (discard_warmup) fn();
  std::vector<double> samples;
  samples.reserve(std::size_t(repeats));
  for (int r = 0; r < repeats; ++r) {
    const double t0 = now_seconds();
    fn();
    samples.push_back(std::max(now_seconds() - t0, 1e-9));
  }
  std::sort(samples.begin(), samples.end());
  TimingStats stats;
  stats.repeats = repeats;
  stats.min_s = samples.front();
  stats.max_s = samples.back();
  const std::size_t n = samples.size();
  stats.median_s = n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  return stats;
}

}  // namespace voxflow
