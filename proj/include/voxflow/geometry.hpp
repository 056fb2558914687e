#pragma once

#include <Eigen/Core>
#include <cmath>

#include "voxflow/point_cloud.hpp"

namespace voxflow {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Azimuth convention everywhere: half-open [-pi, pi), exact +pi remapped to
// -pi so angular binning is unambiguous.
inline double remap_pi(double phi) { return phi == kPi ? -kPi : phi; }

// Wraps an arbitrary angle into [-pi, pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  return remap_pi(r - kPi);
}

// Wraps an arbitrary angle into [0, 2*pi).
inline double wrap_two_pi(double a) {
  double r = std::fmod(a, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  if (r == 2.0 * kPi) r = 0.0;
  return r;
}

struct SphericalCoord {
  double range = 0.0;        // meters, >= 0
  double azimuth = 0.0;      // [-pi, pi)
  double inclination = 0.0;  // [-pi/2, pi/2]
};

struct CylindricalCoord {
  double rho = 0.0;      // meters, >= 0
  double azimuth = 0.0;  // [-pi, pi)
  double z = 0.0;        // meters
};

inline SphericalCoord to_spherical(const Eigen::Vector3d& p) {
  if (!p.allFinite()) throw InvalidInput("non-finite point in spherical conversion");
  SphericalCoord sc;
  sc.range = p.norm();
  if (sc.range == 0.0) return sc;  // origin: azimuth = inclination = 0
  sc.azimuth = remap_pi(std::atan2(p.y(), p.x()));
  sc.inclination = std::atan2(p.z(), std::hypot(p.x(), p.y()));
  return sc;
}

inline Eigen::Vector3d from_spherical(const SphericalCoord& sc) {
  const double c = std::cos(sc.inclination);
  return {sc.range * c * std::cos(sc.azimuth), sc.range * c * std::sin(sc.azimuth),
          sc.range * std::sin(sc.inclination)};
}

inline CylindricalCoord to_cylindrical(const Eigen::Vector3d& p) {
  if (!p.allFinite()) throw InvalidInput("non-finite point in cylindrical conversion");
  CylindricalCoord cc;
  cc.rho = std::hypot(p.x(), p.y());
  cc.azimuth = cc.rho == 0.0 ? 0.0 : remap_pi(std::atan2(p.y(), p.x()));
  cc.z = p.z();
  return cc;
}

// Yaw-only similarity transform. Application order is fixed:
// flip, rotate(yaw), scale, translate.
struct SimilarityTransform {
  double yaw = 0.0;
  double scale = 1.0;
  bool flip_x = false;
  bool flip_y = false;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidInput("scale must be positive");
    if (!std::isfinite(yaw) || !translation.allFinite())
      throw InvalidInput("non-finite transform parameters");
  }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    const double x = flip_x ? -p.x() : p.x();
    const double y = flip_y ? -p.y() : p.y();
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    Eigen::Vector3d q(c * x - s * y, s * x + c * y, p.z());
    return q * scale + translation;
  }

  // Flip conjugation negates the effective rotation when exactly one axis
  // flips, so the inverse stays inside this transform family.
  SimilarityTransform inverse() const {
    validate();
    const double d = (flip_x ? -1.0 : 1.0) * (flip_y ? -1.0 : 1.0);
    SimilarityTransform inv;
    inv.flip_x = flip_x;
    inv.flip_y = flip_y;
    inv.yaw = -yaw * d;
    inv.scale = 1.0 / scale;
    const double c = std::cos(-yaw);
    const double s = std::sin(-yaw);
    Eigen::Vector3d u(c * translation.x() - s * translation.y(),
                      s * translation.x() + c * translation.y(), translation.z());
    if (flip_x) u.x() = -u.x();
    if (flip_y) u.y() = -u.y();
    inv.translation = -u / scale;
    return inv;
  }
};

// Composition: returns the transform equivalent to applying `first`, then
// `second`.
inline SimilarityTransform compose(const SimilarityTransform& second,
                                   const SimilarityTransform& first) {
  const double d2 = (second.flip_x ? -1.0 : 1.0) * (second.flip_y ? -1.0 : 1.0);
  SimilarityTransform out;
  out.flip_x = second.flip_x != first.flip_x;
  out.flip_y = second.flip_y != first.flip_y;
  out.yaw = second.yaw + d2 * first.yaw;
  out.scale = second.scale * first.scale;
  SimilarityTransform linear = second;
  linear.translation.setZero();
  out.translation = linear.apply(first.translation) + second.translation;
  return out;
}

// Intensity and labels pass through unchanged.
inline PointCloud apply_transform(const PointCloud& cloud, const SimilarityTransform& t) {
  t.validate();
  PointCloud out = cloud;
  for (auto& p : out.positions) p = t.apply(p);
  return out;
}

}  // namespace voxflow
