#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "voxflow/metrics.hpp"

using namespace voxflow;
using Catch::Approx;

TEST_CASE("confusion accumulation") {
  SECTION("perfect predictions fill the diagonal") {
    ConfusionMatrix cm(3);
    accumulate(cm, {0, 1, 2, 1}, {0, 1, 2, 1});
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(1, 1) == 2);
    CHECK(cm.at(2, 2) == 1);
    CHECK(cm.total() == 4);
  }

  SECTION("ignored ground truth contributes nothing") {
    ConfusionMatrix cm(2);
    accumulate(cm, {0, 1, 0}, {kIgnoreLabel, kIgnoreLabel, kIgnoreLabel});
    CHECK(cm.total() == 0);
  }

  SECTION("hand-counted example") {
    ConfusionMatrix cm(2);
    accumulate(cm, {0, 1, 1}, {0, 0, 1});
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 1) == 1);
    CHECK(cm.at(1, 0) == 0);
  }

  SECTION("errors") {
    ConfusionMatrix cm(2);
    CHECK_THROWS_AS(accumulate(cm, {0}, {0, 1}), InvalidInput);
    CHECK_THROWS_AS(accumulate(cm, {2}, {0}), InvalidInput);          // pred out of range
    CHECK_THROWS_AS(accumulate(cm, {kIgnoreLabel}, {0}), InvalidInput);  // pred never ignored
    CHECK_THROWS_AS(accumulate(cm, {0}, {5}), InvalidInput);          // gt out of range
  }
}

TEST_CASE("miou and macc on the hand example") {
  ConfusionMatrix cm(2);
  accumulate(cm, {0, 1, 1}, {0, 0, 1});
  const ClassScores iou = miou(cm);
  CHECK(iou.per_class[0] == Approx(0.5));
  CHECK(iou.per_class[1] == Approx(0.5));
  CHECK(iou.mean == Approx(0.5));

  const ClassScores acc = macc(cm);
  CHECK(acc.per_class[0] == Approx(0.5));
  CHECK(acc.per_class[1] == Approx(1.0));
  CHECK(acc.mean == Approx(0.75));
}

TEST_CASE("degenerate metric cases") {
  SECTION("perfect diagonal scores one") {
    ConfusionMatrix cm(3);
    accumulate(cm, {0, 1, 2}, {0, 1, 2});
    CHECK(miou(cm).mean == Approx(1.0));
    CHECK(macc(cm).mean == Approx(1.0));
  }

  SECTION("empty matrix is an error, not zero") {
    ConfusionMatrix cm(3);
    CHECK_THROWS_AS(miou(cm), UndefinedMetric);
    CHECK_THROWS_AS(macc(cm), UndefinedMetric);
  }

  SECTION("classes without support are excluded from the mean") {
    ConfusionMatrix cm(3);
    accumulate(cm, {0, 0}, {0, 0});  // classes 1 and 2 untouched
    const ClassScores iou = miou(cm);
    CHECK(iou.defined == 1);
    CHECK(iou.mean == Approx(1.0));
    CHECK(std::isnan(iou.per_class[1]));
    const ClassScores acc = macc(cm);
    CHECK(acc.defined == 1);
    CHECK(acc.mean == Approx(1.0));
  }

  SECTION("single class predicted perfectly") {
    ConfusionMatrix cm(4);
    accumulate(cm, {2, 2, 2}, {2, 2, 2});
    CHECK(macc(cm).mean == Approx(1.0));
    CHECK(macc(cm).defined == 1);
  }
}

TEST_CASE("accumulation is order independent and merge is elementwise") {
  std::mt19937_64 rng(301);
  std::uniform_int_distribution<std::uint32_t> cls(0, 4);
  std::vector<std::uint32_t> pred(500), gt(500);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = cls(rng);
    gt[i] = cls(rng) == 0 ? kIgnoreLabel : cls(rng);
  }

  ConfusionMatrix whole(5);
  accumulate(whole, pred, gt);

  // shuffled pairs
  std::vector<std::size_t> perm(pred.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::uint32_t> pred2, gt2;
  for (std::size_t i : perm) {
    pred2.push_back(pred[i]);
    gt2.push_back(gt[i]);
  }
  ConfusionMatrix shuffled(5);
  accumulate(shuffled, pred2, gt2);
  REQUIRE(shuffled.counts == whole.counts);

  // split and merge
  ConfusionMatrix lo(5), hi(5);
  accumulate(lo, {pred.begin(), pred.begin() + 250}, {gt.begin(), gt.begin() + 250});
  accumulate(hi, {pred.begin() + 250, pred.end()}, {gt.begin() + 250, gt.end()});
  merge(lo, hi);
  REQUIRE(lo.counts == whole.counts);
}

TEST_CASE("metrics agree with brute-force per-point counting") {
  std::mt19937_64 rng(307);
  std::uniform_int_distribution<int> classes(2, 6);
  std::uniform_int_distribution<int> count(1, 200);
  for (int it = 0; it < 300; ++it) {
    const int c = classes(rng);
    const int n = count(rng);
    std::uniform_int_distribution<std::uint32_t> cls(0, std::uint32_t(c - 1));
    std::uniform_int_distribution<int> ignore(0, 9);
    std::vector<std::uint32_t> pred(static_cast<std::size_t>(n)), gt(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      pred[std::size_t(i)] = cls(rng);
      gt[std::size_t(i)] = ignore(rng) == 0 ? kIgnoreLabel : cls(rng);
    }
    ConfusionMatrix cm(c);
    accumulate(cm, pred, gt);

    bool any_defined = false;
    for (int k = 0; k < c; ++k) {
      // brute-force set counting per class
      std::int64_t inter = 0, uni = 0, support = 0, tp = 0;
      for (int i = 0; i < n; ++i) {
        if (gt[std::size_t(i)] == kIgnoreLabel) continue;
        const bool in_pred = pred[std::size_t(i)] == std::uint32_t(k);
        const bool in_gt = gt[std::size_t(i)] == std::uint32_t(k);
        if (in_pred && in_gt) ++inter, ++tp;
        if (in_pred || in_gt) ++uni;
        if (in_gt) ++support;
      }
      if (uni == 0) continue;
      any_defined = true;
      const ClassScores iou = miou(cm);
      REQUIRE(std::abs(iou.per_class[std::size_t(k)] - double(inter) / double(uni)) <= 1e-12);
      if (support > 0) {
        const ClassScores acc = macc(cm);
        REQUIRE(std::abs(acc.per_class[std::size_t(k)] - double(tp) / double(support)) <= 1e-12);
        // IoU <= Acc since TP/(TP+FP+FN) <= TP/(TP+FN)
        REQUIRE(iou.per_class[std::size_t(k)] <= acc.per_class[std::size_t(k)] + 1e-15);
        REQUIRE(iou.per_class[std::size_t(k)] >= 0.0);
        REQUIRE(iou.per_class[std::size_t(k)] <= 1.0);
      }
    }
    (void)any_defined;
  }
}
