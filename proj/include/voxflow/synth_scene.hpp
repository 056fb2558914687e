#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "voxflow/geometry.hpp"
#include "voxflow/point_cloud.hpp"

// Deterministic synthetic labeled scenes for desk-scale experiments: ground
// patches, box obstacles, and poles sampled on parametric surfaces. Each
// primitive receives beams * points_per_beam samples, so the total point
// count is (ground_patches + boxes + poles) * beams * points_per_beam.

namespace voxflow {

inline constexpr std::uint32_t kClassGround = 0;
inline constexpr std::uint32_t kClassBox = 1;
inline constexpr std::uint32_t kClassPole = 2;
inline constexpr int kSynthClassCount = 3;

struct SynthSceneConfig {
  int ground_patches = 4;
  int boxes = 6;
  int poles = 5;
  int beams = 24;
  int points_per_beam = 48;
  double extent = 40.0;  // scene half-width in x/y, meters
  std::uint64_t seed = 0;

  void validate() const {
    if (ground_patches < 0 || boxes < 0 || poles < 0 || beams < 0 || points_per_beam < 0)
      throw InvalidInput("synthetic scene counts must be non-negative");
    if (!(extent > 0.0)) throw InvalidInput("scene extent must be positive");
  }

  std::size_t total_points() const {
    return std::size_t(ground_patches + boxes + poles) * std::size_t(beams) *
           std::size_t(points_per_beam);
  }
};

inline PointCloud synth_scene(const SynthSceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  PointCloud cloud = make_labeled_cloud();
  cloud.reserve(cfg.total_points());
  const std::size_t per_primitive = std::size_t(cfg.beams) * std::size_t(cfg.points_per_beam);
  const double e = cfg.extent;

  for (int g = 0; g < cfg.ground_patches; ++g) {
    const double cx = uniform(-0.55 * e, 0.55 * e);
    const double cy = uniform(-0.55 * e, 0.55 * e);
    const double sx = uniform(0.15 * e, 0.35 * e);
    const double sy = uniform(0.15 * e, 0.35 * e);
    const double z0 = uniform(-0.05, 0.05);
    for (std::size_t k = 0; k < per_primitive; ++k) {
      const double x = cx + uniform(-sx, sx);
      const double y = cy + uniform(-sy, sy);
      const double z = z0 + 0.02 * std::sin(0.8 * x) * std::cos(0.8 * y);
      append_point(cloud, {x, y, z}, uniform(0.10, 0.30), kClassGround);
    }
  }

  for (int b = 0; b < cfg.boxes; ++b) {
    const double cx = uniform(-0.5 * e, 0.5 * e);
    const double cy = uniform(-0.5 * e, 0.5 * e);
    const double hx = uniform(0.4, 1.5);
    const double hy = uniform(0.4, 1.5);
    const double h = uniform(0.6, 2.5);
    // faces weighted by area: top plus four sides
    const double a_top = 4.0 * hx * hy;
    const double a_x = 2.0 * hy * h;  // each of the two x-facing sides
    const double a_y = 2.0 * hx * h;
    const double a_total = a_top + 2.0 * a_x + 2.0 * a_y;
    for (std::size_t k = 0; k < per_primitive; ++k) {
      const double pick = uniform(0.0, a_total);
      double x, y, z;
      if (pick < a_top) {
        x = cx + uniform(-hx, hx);
        y = cy + uniform(-hy, hy);
        z = h;
      } else if (pick < a_top + 2.0 * a_x) {
        x = pick < a_top + a_x ? cx - hx : cx + hx;
        y = cy + uniform(-hy, hy);
        z = uniform(0.0, h);
      } else {
        x = cx + uniform(-hx, hx);
        y = pick < a_top + 2.0 * a_x + a_y ? cy - hy : cy + hy;
        z = uniform(0.0, h);
      }
      append_point(cloud, {x, y, z}, uniform(0.40, 0.60), kClassBox);
    }
  }

  for (int p = 0; p < cfg.poles; ++p) {
    const double cx = uniform(-0.5 * e, 0.5 * e);
    const double cy = uniform(-0.5 * e, 0.5 * e);
    const double r = uniform(0.06, 0.15);
    const double h = uniform(2.0, 5.0);
    for (std::size_t k = 0; k < per_primitive; ++k) {
      const double a = uniform(0.0, 2.0 * kPi);
      const double z = uniform(0.0, h);
      append_point(cloud, {cx + r * std::cos(a), cy + r * std::sin(a), z},
                   uniform(0.70, 0.90), kClassPole);
    }
  }

  return cloud;
}

}  // namespace voxflow
