#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "voxflow/error.hpp"

namespace voxflow {

// Label value reserved for points excluded from scoring.
inline constexpr std::uint32_t kIgnoreLabel = 0xffffffffu;

// N points with positions in meters, unitless intensity in [0, 1], and
// optional per-point semantic labels.
struct PointCloud {
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> intensity;
  std::optional<std::vector<std::uint32_t>> labels;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool has_labels() const { return labels.has_value(); }

  void reserve(std::size_t n) {
    positions.reserve(n);
    intensity.reserve(n);
    if (labels) labels->reserve(n);
  }

  void validate() const {
    if (intensity.size() != positions.size())
      throw InvalidInput("intensity length does not match point count");
    if (labels && labels->size() != positions.size())
      throw InvalidInput("label length does not match point count");
    for (const auto& p : positions)
      if (!p.allFinite()) throw InvalidInput("non-finite point position");
  }
};

inline PointCloud make_labeled_cloud() {
  PointCloud c;
  c.labels.emplace();
  return c;
}

inline void append_point(PointCloud& c, const Eigen::Vector3d& p, double inten) {
  c.positions.push_back(p);
  c.intensity.push_back(inten);
  if (c.labels) c.labels->push_back(kIgnoreLabel);
}

inline void append_point(PointCloud& c, const Eigen::Vector3d& p, double inten,
                         std::uint32_t label) {
  if (!c.labels) throw MissingLabels("cloud has no label channel");
  c.positions.push_back(p);
  c.intensity.push_back(inten);
  c.labels->push_back(label);
}

// Copies the selected rows (in the given order) into a new cloud.
inline PointCloud select(const PointCloud& c, const std::vector<std::int32_t>& idx) {
  PointCloud out;
  if (c.labels) out.labels.emplace();
  out.reserve(idx.size());
  for (std::int32_t i : idx) {
    out.positions.push_back(c.positions[std::size_t(i)]);
    out.intensity.push_back(c.intensity[std::size_t(i)]);
    if (c.labels) out.labels->push_back((*c.labels)[std::size_t(i)]);
  }
  return out;
}

inline void append_cloud(PointCloud& dst, const PointCloud& src) {
  if (dst.has_labels() != src.has_labels())
    throw InvalidInput("cannot append clouds with mismatched label channels");
  dst.positions.insert(dst.positions.end(), src.positions.begin(), src.positions.end());
  dst.intensity.insert(dst.intensity.end(), src.intensity.begin(), src.intensity.end());
  if (dst.labels) dst.labels->insert(dst.labels->end(), src.labels->begin(), src.labels->end());
}

}  // namespace voxflow
