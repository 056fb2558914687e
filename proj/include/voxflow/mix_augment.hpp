#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "voxflow/geometry.hpp"
#include "voxflow/point_cloud.hpp"

// Scan-mixing augmentations. Every operator partitions the two input clouds
// and reassembles them so that the combined multiset of (position, label)
// pairs is conserved, no point lands in both outputs, and labels travel with
// their points.

namespace voxflow {

enum class AngularAxis { Inclination, Azimuth };

struct MixPartition {
  AngularAxis axis = AngularAxis::Azimuth;
  std::vector<double> boundaries;  // region edges in radians, ascending
  int parity = 0;                  // region-index parity routed to mixed_a from cloud a
  int regions = 0;
};

struct MixResult {
  PointCloud mixed_a;
  PointCloud mixed_b;
  MixPartition partition;
};

namespace detail {

inline void require_labeled(const PointCloud& a, const PointCloud& b) {
  if (!a.has_labels() || !b.has_labels())
    throw MissingLabels("mix augmentation requires labeled clouds");
  a.validate();
  b.validate();
}

inline double mix_angle(const Eigen::Vector3d& p, AngularAxis axis) {
  const SphericalCoord sc = to_spherical(p);
  return axis == AngularAxis::Azimuth ? sc.azimuth : sc.inclination;
}

// Equal-angle alternating band swap shared by lasermix and frustummix.
// Azimuth bands cover [-pi, pi); inclination bands cover the union range of
// both clouds, the top endpoint closing the last band.
inline MixResult angular_band_mix(const PointCloud& a, const PointCloud& b, AngularAxis axis,
                                  int bands) {
  require_labeled(a, b);
  if (bands < 2) throw InvalidInput("band count must be >= 2");

  double lo = -kPi, hi = kPi;
  if (axis == AngularAxis::Inclination) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& p : a.positions) {
      const double v = mix_angle(p, axis);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (const auto& p : b.positions) {
      const double v = mix_angle(p, axis);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (a.empty() && b.empty()) lo = hi = 0.0;
  }
  const double width = (hi - lo) / bands;

  auto band_of = [&](double v) {
    if (width <= 0.0) return 0;
    return std::min(int(std::floor((v - lo) / width)), bands - 1);
  };

  MixResult out;
  out.mixed_a = make_labeled_cloud();
  out.mixed_b = make_labeled_cloud();
  out.partition.axis = axis;
  out.partition.regions = bands;
  out.partition.parity = 0;
  for (int k = 0; k <= bands; ++k) out.partition.boundaries.push_back(lo + k * width);

  auto route = [&](const PointCloud& src, bool src_is_a) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      const int band = band_of(mix_angle(src.positions[i], axis));
      const bool even = band % 2 == 0;
      // even bands of a and odd bands of b build mixed_a
      PointCloud& dst = (even == src_is_a) ? out.mixed_a : out.mixed_b;
      append_point(dst, src.positions[i], src.intensity[i], (*src.labels)[i]);
    }
  };
  route(a, true);
  route(b, false);
  return out;
}

}  // namespace detail

// Alternating angular bands; the seed is accepted for interface uniformity
// but the partition is fully determined by the arguments.
inline MixResult lasermix(const PointCloud& a, const PointCloud& b, AngularAxis axis,
                          int num_bands, std::uint64_t seed) {
  (void)seed;
  return detail::angular_band_mix(a, b, axis, num_bands);
}

// Swaps one azimuth sector [start, start + width), wrapping across the
// +-pi seam.
inline MixResult polarmix_scene(const PointCloud& a, const PointCloud& b, double sector_start,
                                double sector_width, std::uint64_t seed) {
  (void)seed;
  if (!(sector_width > 0.0) || sector_width >= 2.0 * kPi)
    throw InvalidSector("sector width must lie in (0, 2*pi)");
  detail::require_labeled(a, b);

  const double start = wrap_angle(sector_start);
  auto inside = [&](const Eigen::Vector3d& p) {
    const double phi = to_spherical(p).azimuth;
    return wrap_two_pi(phi - start) < sector_width;
  };

  MixResult out;
  out.mixed_a = make_labeled_cloud();
  out.mixed_b = make_labeled_cloud();
  out.partition.axis = AngularAxis::Azimuth;
  out.partition.regions = 2;
  out.partition.boundaries = {start, wrap_angle(start + sector_width)};

  auto route = [&](const PointCloud& src, bool src_is_a) {
    for (std::size_t i = 0; i < src.size(); ++i) {
      const bool in = inside(src.positions[i]);
      // mixed_a keeps a outside the sector and receives b inside it
      PointCloud& dst = (in != src_is_a) ? out.mixed_a : out.mixed_b;
      append_point(dst, src.positions[i], src.intensity[i], (*src.labels)[i]);
    }
  };
  route(a, true);
  route(b, false);
  return out;
}

// Alternating frustum regions along azimuth or inclination. When several
// region counts are offered, one is drawn uniformly under the seed and
// recorded in the partition.
inline MixResult frustummix(const PointCloud& a, const PointCloud& b, AngularAxis axis,
                            const std::vector<int>& region_choices, std::uint64_t seed) {
  if (region_choices.empty()) throw InvalidInput("frustummix needs at least one region count");
  for (int r : region_choices)
    if (r < 2) throw InvalidInput("region counts must be >= 2");
  int regions = region_choices.front();
  if (region_choices.size() > 1) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, region_choices.size() - 1);
    regions = region_choices[pick(rng)];
  }
  return detail::angular_band_mix(a, b, axis, regions);
}

inline MixResult frustummix(const PointCloud& a, const PointCloud& b, AngularAxis axis,
                            int num_regions, std::uint64_t seed) {
  return frustummix(a, b, axis, std::vector<int>{num_regions}, seed);
}

// Sampling ranges for the global similarity augmentation.
struct GlobalAugRanges {
  double yaw_min = -kPi, yaw_max = kPi;
  double scale_min = 0.95, scale_max = 1.05;
  double flip_x_prob = 0.5, flip_y_prob = 0.5;
  Eigen::Vector3d translate_min = Eigen::Vector3d(-0.1, -0.1, -0.1);
  Eigen::Vector3d translate_max = Eigen::Vector3d(0.1, 0.1, 0.1);

  void validate() const {
    if (yaw_max < yaw_min || scale_max < scale_min) throw InvalidInput("inverted range");
    if (!(scale_min > 0.0)) throw InvalidInput("scale range must be positive");
    if (flip_x_prob < 0.0 || flip_x_prob > 1.0 || flip_y_prob < 0.0 || flip_y_prob > 1.0)
      throw InvalidInput("flip probability outside [0, 1]");
    for (int d = 0; d < 3; ++d)
      if (translate_max[d] < translate_min[d]) throw InvalidInput("inverted translation range");
  }
};

inline SimilarityTransform sample_transform(const GlobalAugRanges& ranges, std::mt19937_64& rng) {
  ranges.validate();
  auto uniform = [&](double lo, double hi) {
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  SimilarityTransform t;
  t.yaw = uniform(ranges.yaw_min, ranges.yaw_max);
  t.scale = uniform(ranges.scale_min, ranges.scale_max);
  t.flip_x = std::bernoulli_distribution(ranges.flip_x_prob)(rng);
  t.flip_y = std::bernoulli_distribution(ranges.flip_y_prob)(rng);
  for (int d = 0; d < 3; ++d)
    t.translation[d] = uniform(ranges.translate_min[d], ranges.translate_max[d]);
  return t;
}

inline PointCloud random_global_aug(const PointCloud& cloud, const GlobalAugRanges& ranges,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return apply_transform(cloud, sample_transform(ranges, rng));
}

}  // namespace voxflow
