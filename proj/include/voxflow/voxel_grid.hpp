#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "voxflow/geometry.hpp"
#include "voxflow/point_cloud.hpp"
#include "voxflow/sparse_tensor.hpp"

namespace voxflow {

enum class VoxelMode { Cartesian, Cylindrical, PolarBev };
enum class OutOfBoundsPolicy { Drop, Clamp };

// Axis meaning per mode: Cartesian (x, y, z); Cylindrical (rho, azimuth, z);
// PolarBev (rho, azimuth). Cells are half-open, [lower + k*cell,
// lower + (k+1)*cell); the grid spans ceil((upper - lower) / cell) cells per
// axis, so a partial top cell still accepts values just past `upper`.
template <std::size_t Dim>
struct VoxelizationConfig {
  VoxelMode mode = Dim == 2 ? VoxelMode::PolarBev : VoxelMode::Cartesian;
  std::array<double, Dim> lower{};
  std::array<double, Dim> upper{};
  std::array<double, Dim> cell{};
  OutOfBoundsPolicy out_of_bounds = OutOfBoundsPolicy::Drop;

  std::int64_t extent(std::size_t axis) const {
    return std::int64_t(std::ceil((upper[axis] - lower[axis]) / cell[axis]));
  }

  double total_cells() const {
    double n = 1.0;
    for (std::size_t d = 0; d < Dim; ++d) n *= double(extent(d));
    return n;
  }

  void validate() const {
    if constexpr (Dim == 2) {
      if (mode != VoxelMode::PolarBev)
        throw InvalidSpec("2-axis voxelization supports polar-bev mode only");
    } else if constexpr (Dim == 3) {
      if (mode == VoxelMode::PolarBev)
        throw InvalidSpec("polar-bev voxelization bins two axes");
    }
    for (std::size_t d = 0; d < Dim; ++d) {
      if (!(upper[std::size_t(d)] > lower[std::size_t(d)]))
        throw InvalidSpec("upper bound must exceed lower bound");
      if (!(cell[std::size_t(d)] > 0.0)) throw InvalidSpec("cell size must be positive");
      if (extent(d) > std::int64_t(std::numeric_limits<std::int32_t>::max()))
        throw InvalidSpec("grid extent exceeds 32-bit cell indices");
    }
  }
};

// Bidirectional point/voxel association. cell_of_point is -1 for dropped
// points; every non-dropped point appears in exactly one member list.
struct PointToCellMap {
  std::vector<std::int32_t> cell_of_point;
  std::vector<std::vector<std::int32_t>> points_of_cell;
};

template <std::size_t Dim>
struct VoxelizeResult {
  std::vector<Coord<Dim>> coords;  // deduplicated, lexicographically sorted
  PointToCellMap map;
};

namespace detail {

template <std::size_t Dim>
std::array<double, Dim> binned_values(const Eigen::Vector3d& p, VoxelMode mode) {
  std::array<double, Dim> v{};
  if constexpr (Dim == 3) {
    if (mode == VoxelMode::Cartesian) {
      v = {p.x(), p.y(), p.z()};
    } else {
      const CylindricalCoord cc = to_cylindrical(p);
      v = {cc.rho, cc.azimuth, cc.z};
    }
  } else {
    const CylindricalCoord cc = to_cylindrical(p);
    v = {cc.rho, cc.azimuth};
  }
  return v;
}

}  // namespace detail

template <std::size_t Dim>
VoxelizeResult<Dim> voxelize(const PointCloud& cloud, const VoxelizationConfig<Dim>& cfg) {
  cfg.validate();
  cloud.validate();
  const std::size_t n = cloud.size();

  VoxelizeResult<Dim> result;
  result.map.cell_of_point.assign(n, -1);

  std::vector<std::pair<Coord<Dim>, std::int32_t>> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto values = detail::binned_values<Dim>(cloud.positions[i], cfg.mode);
    Coord<Dim> cell;
    bool keep = true;
    for (std::size_t d = 0; d < Dim; ++d) {
      const double raw =
          std::floor((values[std::size_t(d)] - cfg.lower[std::size_t(d)]) / cfg.cell[std::size_t(d)]);
      std::int64_t bin = std::int64_t(raw);
      const std::int64_t ext = cfg.extent(d);
      if (bin < 0 || bin >= ext) {
        if (cfg.out_of_bounds == OutOfBoundsPolicy::Drop) {
          keep = false;
          break;
        }
        bin = std::clamp<std::int64_t>(bin, 0, ext - 1);
      }
      cell[std::size_t(d)] = std::int32_t(bin);
    }
    if (keep) entries.emplace_back(cell, std::int32_t(i));
  }

  std::sort(entries.begin(), entries.end());
  result.coords.reserve(entries.size());
  for (const auto& [cell, point] : entries) {
    if (result.coords.empty() || result.coords.back() != cell) {
      result.coords.push_back(cell);
      result.map.points_of_cell.emplace_back();
    }
    result.map.cell_of_point[std::size_t(point)] = std::int32_t(result.coords.size() - 1);
    result.map.points_of_cell.back().push_back(point);
  }
  return result;
}

// Default voxel feature encoder: arithmetic mean over member points of
// (x, y, z, intensity). Feature width is 4.
template <typename T, std::size_t Dim>
Matrix<T> encode_voxel_features(const PointCloud& cloud, const VoxelizeResult<Dim>& vox) {
  Matrix<T> out = Matrix<T>::Zero(std::int64_t(vox.coords.size()), 4);
  for (std::size_t c = 0; c < vox.map.points_of_cell.size(); ++c) {
    const auto& members = vox.map.points_of_cell[c];
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    double inten = 0.0;
    for (std::int32_t p : members) {
      pos += cloud.positions[std::size_t(p)];
      inten += cloud.intensity[std::size_t(p)];
    }
    const double inv = 1.0 / double(members.size());
    out(Eigen::Index(c), 0) = T(pos.x() * inv);
    out(Eigen::Index(c), 1) = T(pos.y() * inv);
    out(Eigen::Index(c), 2) = T(pos.z() * inv);
    out(Eigen::Index(c), 3) = T(inten * inv);
  }
  return out;
}

// Variant with positions taken relative to each voxel's cell center, which
// makes features invariant under whole-voxel translations. Cartesian only.
template <typename T>
Matrix<T> encode_voxel_features_centered(const PointCloud& cloud, const VoxelizeResult<3>& vox,
                                         const VoxelizationConfig<3>& cfg) {
  if (cfg.mode != VoxelMode::Cartesian)
    throw InvalidSpec("centered voxel features require cartesian mode");
  Matrix<T> out = Matrix<T>::Zero(std::int64_t(vox.coords.size()), 4);
  for (std::size_t c = 0; c < vox.map.points_of_cell.size(); ++c) {
    const auto& members = vox.map.points_of_cell[c];
    Eigen::Vector3d center;
    for (int d = 0; d < 3; ++d)
      center[d] = cfg.lower[std::size_t(d)] +
                  (double(vox.coords[c][std::size_t(d)]) + 0.5) * cfg.cell[std::size_t(d)];
    Eigen::Vector3d pos = Eigen::Vector3d::Zero();
    double inten = 0.0;
    for (std::int32_t p : members) {
      pos += cloud.positions[std::size_t(p)] - center;
      inten += cloud.intensity[std::size_t(p)];
    }
    const double inv = 1.0 / double(members.size());
    out(Eigen::Index(c), 0) = T(pos.x() * inv);
    out(Eigen::Index(c), 1) = T(pos.y() * inv);
    out(Eigen::Index(c), 2) = T(pos.z() * inv);
    out(Eigen::Index(c), 3) = T(inten * inv);
  }
  return out;
}

// Scatter per-voxel labels back to the member points; dropped points receive
// kIgnoreLabel.
inline std::vector<std::uint32_t> devoxelize_labels(const std::vector<std::uint32_t>& cell_labels,
                                                    const PointToCellMap& map) {
  if (cell_labels.size() != map.points_of_cell.size())
    throw InconsistentMap("cell label count does not match voxel count");
  std::vector<std::uint32_t> out(map.cell_of_point.size(), kIgnoreLabel);
  for (std::size_t i = 0; i < map.cell_of_point.size(); ++i)
    if (map.cell_of_point[i] >= 0) out[i] = cell_labels[std::size_t(map.cell_of_point[i])];
  return out;
}

// Scatter per-voxel value rows back to points; dropped points receive zeros.
template <typename T>
Matrix<T> devoxelize_values(const Matrix<T>& cell_values, const PointToCellMap& map) {
  if (std::size_t(cell_values.rows()) != map.points_of_cell.size())
    throw InconsistentMap("cell value count does not match voxel count");
  Matrix<T> out = Matrix<T>::Zero(std::int64_t(map.cell_of_point.size()), cell_values.cols());
  for (std::size_t i = 0; i < map.cell_of_point.size(); ++i)
    if (map.cell_of_point[i] >= 0) out.row(Eigen::Index(i)) = cell_values.row(map.cell_of_point[i]);
  return out;
}

// Nonzero fraction of the configured grid.
template <std::size_t Dim>
double occupancy(const VoxelizationConfig<Dim>& cfg, std::size_t voxel_count) {
  return double(voxel_count) / cfg.total_cells();
}

}  // namespace voxflow
