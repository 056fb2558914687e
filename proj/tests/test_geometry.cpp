#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "voxflow/geometry.hpp"
#include "test_util.hpp"

using namespace voxflow;
using Catch::Approx;

TEST_CASE("spherical conversion on axis-aligned and hand-checked points") {
  const SphericalCoord x_axis = to_spherical({1, 0, 0});
  CHECK(x_axis.range == Approx(1.0));
  CHECK(x_axis.azimuth == Approx(0.0).margin(1e-15));
  CHECK(x_axis.inclination == Approx(0.0).margin(1e-15));

  const SphericalCoord zenith = to_spherical({0, 0, 1});
  CHECK(zenith.range == Approx(1.0));
  CHECK(zenith.azimuth == Approx(0.0).margin(1e-15));
  CHECK(zenith.inclination == Approx(kPi / 2));

  // norm = sqrt(1 + 1 + 2) = 2, both angles atan2(1, 1) = pi/4
  const SphericalCoord diag = to_spherical({1, 1, std::sqrt(2.0)});
  CHECK(diag.range == Approx(2.0));
  CHECK(diag.azimuth == Approx(kPi / 4));
  CHECK(diag.inclination == Approx(kPi / 4));

  const SphericalCoord origin = to_spherical({0, 0, 0});
  CHECK(origin.range == 0.0);
  CHECK(origin.azimuth == 0.0);
  CHECK(origin.inclination == 0.0);

  CHECK_THROWS_AS(to_spherical({std::nan(""), 0, 0}), InvalidInput);
}

TEST_CASE("cylindrical conversion conventions") {
  const CylindricalCoord c345 = to_cylindrical({3, 4, 5});
  CHECK(c345.rho == Approx(5.0));
  CHECK(c345.azimuth == Approx(std::atan2(4.0, 3.0)));
  CHECK(c345.z == Approx(5.0));

  const CylindricalCoord axis = to_cylindrical({0, 0, 2});
  CHECK(axis.rho == 0.0);
  CHECK(axis.azimuth == 0.0);
  CHECK(axis.z == Approx(2.0));

  // azimuth interval is [-pi, pi); the +pi boundary remaps to -pi
  const CylindricalCoord back = to_cylindrical({-1, 0, 0});
  CHECK(back.rho == Approx(1.0));
  CHECK(back.azimuth == Approx(-kPi));

  CHECK_THROWS_AS(to_cylindrical({0, std::nan(""), 0}), InvalidInput);
}

TEST_CASE("angle wrapping stays in the half-open interval") {
  CHECK(wrap_angle(kPi) == Approx(-kPi));
  CHECK(wrap_angle(-kPi) == Approx(-kPi));
  CHECK(wrap_angle(3.0) == Approx(3.0));
  CHECK(wrap_angle(4.0) == Approx(4.0 - 2 * kPi));
  CHECK(wrap_angle(3 * kPi) == Approx(-kPi));
  CHECK(wrap_two_pi(-0.1) == Approx(2 * kPi - 0.1));
}

TEST_CASE("transforms apply in flip, rotate, scale, translate order") {
  PointCloud cloud = make_labeled_cloud();
  append_point(cloud, {1, 0, 0}, 0.5, 2u);
  append_point(cloud, {1, 2, 0}, 0.25, 7u);

  SECTION("identity transform leaves the cloud untouched") {
    const PointCloud out = apply_transform(cloud, SimilarityTransform{});
    CHECK(testutil::same_cloud_exact(out, cloud));
  }

  SECTION("quarter-turn yaw") {
    SimilarityTransform t;
    t.yaw = kPi / 2;
    const PointCloud out = apply_transform(cloud, t);
    CHECK(out.positions[0].x() == Approx(0.0).margin(1e-12));
    CHECK(out.positions[0].y() == Approx(1.0).margin(1e-12));
    CHECK(out.positions[0].z() == Approx(0.0).margin(1e-12));
  }

  SECTION("flip-x then yaw pi") {
    // flip-x sends (1,2,0) to (-1,2,0); a half turn then gives (1,-2,0)
    SimilarityTransform t;
    t.flip_x = true;
    t.yaw = kPi;
    const PointCloud out = apply_transform(cloud, t);
    CHECK(out.positions[1].x() == Approx(1.0).margin(1e-12));
    CHECK(out.positions[1].y() == Approx(-2.0).margin(1e-12));
  }

  SECTION("intensity and labels pass through") {
    SimilarityTransform t;
    t.yaw = 0.3;
    t.scale = 1.2;
    t.translation = {1, 2, 3};
    const PointCloud out = apply_transform(cloud, t);
    CHECK(out.intensity == cloud.intensity);
    CHECK(*out.labels == *cloud.labels);
    CHECK(out.size() == cloud.size());
  }

  SECTION("non-positive scale is rejected") {
    SimilarityTransform t;
    t.scale = 0.0;
    CHECK_THROWS_AS(apply_transform(cloud, t), InvalidInput);
  }
}

namespace {

SimilarityTransform random_transform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_real_distribution<double> shift(-5.0, 5.0);
  std::uniform_int_distribution<int> coin(0, 1);
  SimilarityTransform t;
  t.yaw = angle(rng);
  t.scale = scale(rng);
  t.flip_x = coin(rng) == 1;
  t.flip_y = coin(rng) == 1;
  t.translation = {shift(rng), shift(rng), shift(rng)};
  return t;
}

double rel_pos_error(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return (a - b).norm() / std::max(1.0, a.norm());
}

}  // namespace

TEST_CASE("transform inverse round trip") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 200; ++it) {
    const SimilarityTransform t = random_transform(rng);
    const SimilarityTransform inv = t.inverse();
    const PointCloud cloud = testutil::random_labeled_cloud(rng, 20);
    const PointCloud round = apply_transform(apply_transform(cloud, t), inv);
    for (std::size_t i = 0; i < cloud.size(); ++i)
      REQUIRE(rel_pos_error(cloud.positions[i], round.positions[i]) < 1e-9);
    REQUIRE(*round.labels == *cloud.labels);
  }
}

TEST_CASE("spherical round trip is the identity on valid coordinates") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> radius(1e-3, 100.0);
  std::uniform_real_distribution<double> az(-kPi, kPi - 1e-9);
  std::uniform_real_distribution<double> inc(-kPi / 2 + 1e-6, kPi / 2 - 1e-6);
  for (int it = 0; it < 500; ++it) {
    SphericalCoord sc{radius(rng), az(rng), inc(rng)};
    const SphericalCoord back = to_spherical(from_spherical(sc));
    REQUIRE(std::abs(back.range - sc.range) / sc.range < 1e-9);
    REQUIRE(std::abs(back.azimuth - sc.azimuth) < 1e-9);
    REQUIRE(std::abs(back.inclination - sc.inclination) < 1e-9);
  }
}

TEST_CASE("composition is associative on resulting positions") {
  std::mt19937_64 rng(13);
  for (int it = 0; it < 100; ++it) {
    const SimilarityTransform t1 = random_transform(rng);
    const SimilarityTransform t2 = random_transform(rng);
    const SimilarityTransform t3 = random_transform(rng);
    const SimilarityTransform left = compose(compose(t3, t2), t1);
    const SimilarityTransform right = compose(t3, compose(t2, t1));
    std::uniform_real_distribution<double> span(-10.0, 10.0);
    for (int k = 0; k < 5; ++k) {
      const Eigen::Vector3d p(span(rng), span(rng), span(rng));
      const Eigen::Vector3d chained = t3.apply(t2.apply(t1.apply(p)));
      REQUIRE(rel_pos_error(chained, left.apply(p)) < 1e-9);
      REQUIRE(rel_pos_error(chained, right.apply(p)) < 1e-9);
    }
  }
}
