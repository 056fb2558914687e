#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "voxflow/geometry.hpp"
#include "voxflow/point_cloud.hpp"
#include "voxflow/sparse_tensor.hpp"

namespace voxflow {

// Spherical projection of a scan. Every point is assigned to exactly one
// pixel (rows and columns clamp, never drop); a pixel stores its
// minimum-range point, earliest point index winning range ties. Channels are
// (range, x, y, z, intensity) of the stored point, zero where empty.
struct RangeImage {
  static constexpr std::int32_t kEmpty = -1;

  int height = 0;
  int width = 0;
  std::vector<std::int32_t> pixel_point;  // height*width, kEmpty where unassigned
  Matrix<double> channels;                // height*width x 5
  std::vector<std::int32_t> point_pixel;  // per point

  std::size_t pixel_index(int row, int col) const {
    return std::size_t(row) * std::size_t(width) + std::size_t(col);
  }
};

inline RangeImage project_range(const PointCloud& cloud, int height, int width, double fov_up,
                                double fov_down) {
  if (height < 1 || width < 1) throw InvalidSpec("range image needs height, width >= 1");
  if (!(fov_up > fov_down)) throw InvalidSpec("fov_up must exceed fov_down");
  cloud.validate();

  RangeImage img;
  img.height = height;
  img.width = width;
  img.pixel_point.assign(std::size_t(height) * std::size_t(width), RangeImage::kEmpty);
  img.channels = Matrix<double>::Zero(std::int64_t(height) * width, 5);
  img.point_pixel.resize(cloud.size());

  const double fov_span = fov_up - fov_down;
  std::vector<double> ranges(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const SphericalCoord sc = to_spherical(cloud.positions[i]);
    ranges[i] = sc.range;
    int row = int(std::floor((1.0 - (sc.inclination - fov_down) / fov_span) * height));
    int col = int(std::floor((sc.azimuth + kPi) / (2.0 * kPi) * width));
    row = std::clamp(row, 0, height - 1);
    col = std::clamp(col, 0, width - 1);
    const std::size_t pix = img.pixel_index(row, col);
    img.point_pixel[i] = std::int32_t(pix);
    const std::int32_t cur = img.pixel_point[pix];
    if (cur == RangeImage::kEmpty || sc.range < ranges[std::size_t(cur)])
      img.pixel_point[pix] = std::int32_t(i);
  }

  for (std::size_t pix = 0; pix < img.pixel_point.size(); ++pix) {
    const std::int32_t p = img.pixel_point[pix];
    if (p == RangeImage::kEmpty) continue;
    const auto& pos = cloud.positions[std::size_t(p)];
    img.channels(std::int64_t(pix), 0) = ranges[std::size_t(p)];
    img.channels(std::int64_t(pix), 1) = pos.x();
    img.channels(std::int64_t(pix), 2) = pos.y();
    img.channels(std::int64_t(pix), 3) = pos.z();
    img.channels(std::int64_t(pix), 4) = cloud.intensity[std::size_t(p)];
  }
  return img;
}

}  // namespace voxflow
