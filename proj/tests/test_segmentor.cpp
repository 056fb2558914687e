#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <random>

#include "voxflow/checkpoint.hpp"
#include "voxflow/segmentor.hpp"
#include "voxflow/synth_scene.hpp"
#include "test_util.hpp"

using namespace voxflow;
using Catch::Approx;

namespace {

SegmentorConfig tiny_config(int levels = 2) {
  SegmentorConfig cfg;
  cfg.voxel.lower = {-24.0, -24.0, -4.0};
  cfg.voxel.upper = {24.0, 24.0, 8.0};
  cfg.voxel.cell = {0.5, 0.5, 0.5};
  if (levels == 1) {
    cfg.widths = {6};
    cfg.blocks = {1};
  } else {
    cfg.widths = {4, 8};
    cfg.blocks = {1, 1};
  }
  cfg.num_classes = 3;
  cfg.seed = 5;
  return cfg;
}

PointCloud small_scene(std::uint64_t seed, int pts = 120) {
  std::mt19937_64 rng(seed);
  return testutil::random_labeled_cloud(rng, std::size_t(pts));
}

}  // namespace

TEST_CASE("forward contracts") {
  const Segmentor<float> model(tiny_config());

  SECTION("logit shape is N x C") {
    const PointCloud cloud = small_scene(1);
    const Matrix<float> logits = model.forward(cloud);
    CHECK(logits.rows() == std::int64_t(cloud.size()));
    CHECK(logits.cols() == 3);
  }

  SECTION("empty cloud gives empty logits") {
    const Matrix<float> logits = model.forward(PointCloud{});
    CHECK(logits.rows() == 0);
    CHECK(logits.cols() == 3);
  }

  SECTION("points sharing a voxel share logits") {
    PointCloud cloud = make_labeled_cloud();
    append_point(cloud, {1.01, 1.01, 0.2}, 0.3, 0u);
    append_point(cloud, {1.02, 1.02, 0.21}, 0.9, 1u);
    append_point(cloud, {5.0, -3.0, 0.5}, 0.1, 2u);
    const Matrix<float> logits = model.forward(cloud);
    REQUIRE((logits.row(0) - logits.row(1)).cwiseAbs().maxCoeff() == 0.0f);
  }

  SECTION("zero weights give zero logits and class-0 predictions") {
    Segmentor<float> zeroed(tiny_config());
    for (auto* p : zeroed.params()) p->setZero();
    const PointCloud cloud = small_scene(2);
    const Matrix<float> logits = zeroed.forward(cloud);
    CHECK(logits.cwiseAbs().maxCoeff() == 0.0f);
    const auto pred = zeroed.predict(cloud);
    for (std::uint32_t p : pred) CHECK(p == 0u);  // ties break to the lowest index
  }

  SECTION("prediction picks the strict per-point maximum") {
    const PointCloud cloud = small_scene(3);
    const auto pred = model.predict(cloud);
    const Matrix<float> logits = model.forward(cloud);
    REQUIRE(pred.size() == cloud.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
      for (Eigen::Index c = 0; c < logits.cols(); ++c)
        REQUIRE(logits(Eigen::Index(i), Eigen::Index(pred[i])) >= logits(Eigen::Index(i), c));
  }
}

TEST_CASE("loss") {
  SECTION("uniform logits cost ln C per point") {
    const Matrix<float> logits = Matrix<float>::Zero(10, 4);
    const std::vector<std::uint32_t> labels(10, 2u);
    const LossValue loss = softmax_cross_entropy(logits, labels);
    CHECK(loss.value == Approx(std::log(4.0)));
    CHECK(loss.scored == 10);
  }

  SECTION("all-ignored labels are flagged with zero loss") {
    const Matrix<float> logits = Matrix<float>::Random(5, 3);
    const std::vector<std::uint32_t> labels(5, kIgnoreLabel);
    const LossValue loss = softmax_cross_entropy(logits, labels);
    CHECK(loss.value == 0.0);
    CHECK(loss.scored == 0);
  }

  SECTION("a huge correct margin drives the loss to zero") {
    Matrix<float> logits = Matrix<float>::Zero(1, 3);
    logits(0, 1) = 50.0f;
    const LossValue loss = softmax_cross_entropy(logits, {1u});
    CHECK(loss.value < 1e-6);
  }

  SECTION("out-of-range labels are rejected") {
    const Matrix<float> logits = Matrix<float>::Zero(1, 3);
    CHECK_THROWS_AS(softmax_cross_entropy(logits, {7u}), InvalidInput);
  }
}

TEST_CASE("training steps") {
  SECTION("a 1-voxel 2-class toy problem trains below 0.05 loss in 100 steps") {
    SegmentorConfig cfg = tiny_config(1);
    cfg.num_classes = 2;
    cfg.optim.lr = 0.05;
    cfg.optim.weight_decay = 0.0;
    Trainer<float> trainer(cfg);
    PointCloud cloud = make_labeled_cloud();
    append_point(cloud, {0.1, 0.1, 0.1}, 0.8, 1u);
    append_point(cloud, {0.12, 0.12, 0.12}, 0.8, 1u);
    double loss = 0.0;
    for (int i = 0; i < 100; ++i) loss = trainer.train_step({&cloud});
    CHECK(loss < 0.05);
  }

  SECTION("zero learning rate leaves parameters unchanged") {
    SegmentorConfig cfg = tiny_config();
    cfg.optim.lr = 0.0;
    Trainer<float> trainer(cfg);
    const Segmentor<float> reference(cfg);
    const PointCloud scene = small_scene(4);
    trainer.train_step({&scene});
    const auto& trained = trainer.model().params();
    const auto& initial = reference.params();
    for (std::size_t i = 0; i < trained.size(); ++i)
      REQUIRE(testutil::bits_equal(*trained[i], *initial[i]));
  }

  SECTION("fixed seeds give bit-identical loss traces") {
    const SegmentorConfig cfg = tiny_config();
    const PointCloud a = small_scene(6), b = small_scene(7);
    auto run = [&] {
      Trainer<float> trainer(cfg);
      std::vector<double> trace;
      for (int i = 0; i < 5; ++i) trace.push_back(trainer.train_step({&a, &b}));
      return trace;
    };
    REQUIRE(run() == run());
  }

  SECTION("unlabeled clouds cannot be trained on") {
    Trainer<float> trainer(tiny_config());
    PointCloud plain;
    append_point(plain, {0, 0, 0}, 0.0);
    CHECK_THROWS_AS(trainer.train_step({&plain}), MissingLabels);
  }
}

TEST_CASE("coordinate caching restores encoder coordinate sets exactly") {
  const Segmentor<float> model(tiny_config());
  const PointCloud cloud = small_scene(8, 300);
  const auto fr = model.forward_traced(cloud);
  REQUIRE(fr.trace.levels.size() == 2);
  REQUIRE(fr.trace.decoder.size() == 1);
  REQUIRE(fr.trace.decoder[0].up_map.out_coords == fr.trace.levels[0].coords);
  // the down map's outputs are the deeper level's coordinates
  REQUIRE(fr.trace.levels[0].down_map.out_coords.size() > 0);
}

TEST_CASE("integer voxel translations leave logits unchanged on a submanifold net") {
  SegmentorConfig cfg = tiny_config(1);  // no down/upsampling
  const Segmentor<float> model(cfg);

  std::mt19937_64 rng(901);
  std::uniform_real_distribution<double> span(-8.0, 8.0);
  std::uniform_real_distribution<double> jitter(0.1, 0.4);  // keep off cell boundaries
  PointCloud cloud = make_labeled_cloud();
  for (int i = 0; i < 200; ++i) {
    const double x = std::floor(span(rng)) + jitter(rng);
    const double y = std::floor(span(rng)) + jitter(rng);
    const double z = std::floor(span(rng) / 4.0) + jitter(rng);
    append_point(cloud, {x, y, z}, 0.5, 0u);
  }

  PointCloud shifted = cloud;
  const Eigen::Vector3d shift(2 * 0.5, -3 * 0.5, 1 * 0.5);  // exact voxel multiples
  for (auto& p : shifted.positions) p += shift;

  const Matrix<float> base = model.forward(cloud);
  const Matrix<float> moved = model.forward(shifted);
  REQUIRE(base.rows() == moved.rows());
  REQUIRE((base - moved).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("whole-network gradients match central finite differences") {
  const double h = 1e-3;
  const double rel_tol = 1e-4;
  const double abs_floor = 1e-7;

  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SegmentorConfig cfg;
    cfg.voxel.lower = {-6.0, -6.0, -6.0};
    cfg.voxel.upper = {6.0, 6.0, 6.0};
    cfg.voxel.cell = {1.0, 1.0, 1.0};
    cfg.widths = {2, 3};
    cfg.blocks = {1, 1};
    cfg.num_classes = 2;
    cfg.seed = 100 + seed;

    Segmentor<double> model(cfg);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> span(-5.0, 5.0);
    std::uniform_int_distribution<std::uint32_t> cls(0, 1);
    PointCloud cloud = make_labeled_cloud();
    for (int i = 0; i < 30; ++i)
      append_point(cloud, {span(rng), span(rng), span(rng)}, 0.5, cls(rng));

    auto loss_of = [&]() {
      const auto fr = model.forward_traced(cloud);
      return voxel_loss_grad(fr.trace.voxel_logits, *cloud.labels, fr.trace.vox.map).value;
    };

    const auto fr = model.forward_traced(cloud);
    const auto lg = voxel_loss_grad(fr.trace.voxel_logits, *cloud.labels, fr.trace.vox.map);
    const auto grads = model.backward(fr.trace, lg.grad_voxel_logits);
    auto& params = model.params();
    REQUIRE(grads.size() == params.size());

    for (std::size_t p = 0; p < params.size(); ++p) {
      for (Eigen::Index k = 0; k < params[p]->size(); ++k) {
        const double saved = params[p]->data()[k];
        params[p]->data()[k] = saved + h;
        const double up = loss_of();
        params[p]->data()[k] = saved - h;
        const double down = loss_of();
        params[p]->data()[k] = saved;
        const double numeric = (up - down) / (2 * h);
        const double analytic = grads[p].data()[k];
        const double diff = std::abs(analytic - numeric);
        INFO("seed=" << seed << " param " << model.param_names()[p] << " entry " << k);
        REQUIRE((diff <= rel_tol * std::max(std::abs(analytic), std::abs(numeric)) ||
                 diff <= abs_floor));
      }
    }
  }
}

TEST_CASE("checkpoints") {
  const SegmentorConfig cfg = tiny_config();
  Segmentor<float> model(cfg);

  SECTION("save, load, save is bit-identical") {
    const auto bytes = checkpoint_bytes(model);
    const Segmentor<float> loaded = checkpoint_from_bytes(bytes);
    REQUIRE(checkpoint_bytes(loaded) == bytes);
    const PointCloud scene = small_scene(10);
    REQUIRE(testutil::bits_equal(model.forward(scene), loaded.forward(scene)));
  }

  SECTION("file round trip") {
    const auto path = std::filesystem::temp_directory_path() / "voxflow_ckpt_test.bin";
    save_checkpoint(path.string(), model);
    const Segmentor<float> loaded = load_checkpoint(path.string());
    REQUIRE(checkpoint_bytes(loaded) == checkpoint_bytes(model));
    std::filesystem::remove(path);
  }

  SECTION("corrupted magic is rejected") {
    auto bytes = checkpoint_bytes(model);
    bytes[0] ^= 0xff;
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes), IncompatibleCheckpoint);
  }

  SECTION("truncation is rejected") {
    auto bytes = checkpoint_bytes(model);
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(checkpoint_from_bytes(bytes), IncompatibleCheckpoint);
  }

  SECTION("architecture mismatch is incompatible") {
    SegmentorConfig other = cfg;
    other.widths = {8, 16};
    CHECK_THROWS_AS(ensure_compatible(cfg, other), IncompatibleCheckpoint);
    SegmentorConfig same_shape = cfg;
    same_shape.seed = 999;  // seed does not affect compatibility
    ensure_compatible(cfg, same_shape);
  }
}
