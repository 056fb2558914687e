#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "voxflow/tta.hpp"
#include "test_util.hpp"

using namespace voxflow;

namespace {

// Deterministic stand-in model: logits depend on the azimuth of the first
// point, so rotation variants disagree with each other.
struct AngleStub {
  double threshold = 0.1;
  double margin = 2.0;

  Matrix<double> operator()(const PointCloud& cloud) const {
    Matrix<double> logits = Matrix<double>::Zero(std::int64_t(cloud.size()), 2);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const double phi = to_spherical(cloud.positions[i]).azimuth;
      if (phi < -threshold)
        logits(Eigen::Index(i), 0) = margin;
      else if (phi > threshold)
        logits(Eigen::Index(i), 1) = margin;
    }
    return logits;
  }
};

}  // namespace

TEST_CASE("variant counts under progressive enabling") {
  TTAConfig cfg;
  CHECK(enumerate_variants(cfg).size() == 1);
  cfg.flip = true;
  CHECK(enumerate_variants(cfg).size() == 4);
  cfg.rotate = true;
  CHECK(enumerate_variants(cfg).size() == 12);
  cfg.scale = true;
  CHECK(enumerate_variants(cfg).size() == 36);
  cfg.translate = true;
  CHECK(enumerate_variants(cfg).size() == 108);
  CHECK(cfg.variant_count() == 108);
}

TEST_CASE("variant sets must contain their identity elements") {
  TTAConfig cfg;
  cfg.scales = {0.9, 0.95, 1.05};  // no 1.0
  CHECK_THROWS_AS(enumerate_variants(cfg), InvalidSpec);
}

TEST_CASE("identity-only configuration equals plain prediction") {
  PointCloud cloud;
  append_point(cloud, {1.0, 0.5, 0.0}, 0.0);
  append_point(cloud, {1.0, -0.5, 0.0}, 0.0);
  const AngleStub model;
  const TTAConfig cfg;  // everything disabled
  const auto tta = tta_predict(cloud, model, cfg);
  const auto plain = argmax_rows(model(cloud));
  REQUIRE(tta == plain);
}

TEST_CASE("duplicated identity variants do not change the result") {
  PointCloud cloud;
  append_point(cloud, {1.0, 0.4, 0.0}, 0.0);
  const AngleStub model;
  TTAConfig repeated;
  repeated.rotate = true;
  repeated.rotations = {0.0, 0.0, 0.0};  // three identical variants
  const auto averaged = tta_predict(cloud, model, repeated);
  const auto plain = argmax_rows(model(cloud));
  REQUIRE(averaged == plain);
}

TEST_CASE("aggregation is permutation invariant over variants") {
  std::mt19937_64 rng(509);
  const PointCloud cloud = testutil::random_labeled_cloud(rng, 40);
  const AngleStub model;
  TTAConfig fwd;
  fwd.rotate = true;
  TTAConfig rev = fwd;
  rev.rotations = {kPi / 4, 0.0, -kPi / 4};
  REQUIRE(tta_predict(cloud, model, fwd) == tta_predict(cloud, model, rev));
}

TEST_CASE("probability averaging decides hand-computed disagreements") {
  // one point at azimuth 0; yaw variants -pi/4, 0, +pi/4 move it across the
  // stub's decision threshold
  PointCloud cloud;
  append_point(cloud, {1.0, 0.0, 0.0}, 0.0);
  TTAConfig cfg;
  cfg.rotate = true;

  SECTION("an exact tie resolves to the lower class index") {
    auto uniform = [](const PointCloud& c) {
      return Matrix<double>(Matrix<double>::Zero(std::int64_t(c.size()), 2));
    };
    const auto pred = tta_predict(cloud, uniform, cfg);
    REQUIRE(pred.size() == 1);
    CHECK(pred[0] == 0u);
  }

  SECTION("an asymmetric stub tips the average") {
    // class 1 answers with a much larger margin than class 0
    struct Lopsided {
      Matrix<double> operator()(const PointCloud& c) const {
        Matrix<double> logits = Matrix<double>::Zero(std::int64_t(c.size()), 2);
        for (std::size_t i = 0; i < c.size(); ++i) {
          const double phi = to_spherical(c.positions[i]).azimuth;
          if (phi < -0.1)
            logits(Eigen::Index(i), 0) = 1.0;
          else if (phi > 0.1)
            logits(Eigen::Index(i), 1) = 4.0;
        }
        return logits;
      }
    };
    // hand-computed softmax average over the three variants
    const double p0_var0 = std::exp(1.0) / (std::exp(1.0) + 1.0);  // yaw -pi/4
    const double p0_var1 = 0.5;                                    // identity
    const double p0_var2 = 1.0 / (1.0 + std::exp(4.0));            // yaw +pi/4
    const double mean0 = (p0_var0 + p0_var1 + p0_var2) / 3.0;
    REQUIRE(mean0 < 0.5);
    const auto pred = tta_predict(cloud, Lopsided{}, cfg);
    CHECK(pred[0] == 1u);
  }
}

TEST_CASE("model failures are propagated with the variant identified") {
  PointCloud cloud;
  append_point(cloud, {1.0, 0.0, 0.0}, 0.0);
  TTAConfig cfg;
  cfg.flip = true;
  auto failing = [](const PointCloud& c) -> Matrix<double> {
    if (c.positions[0].x() < 0) throw std::runtime_error("backbone exploded");
    return Matrix<double>::Zero(std::int64_t(c.size()), 2);
  };
  try {
    tta_predict(cloud, failing, cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("variant") != std::string::npos);
    CHECK(what.find("backbone exploded") != std::string::npos);
  }
}
