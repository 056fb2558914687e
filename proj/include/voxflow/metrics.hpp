#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "voxflow/point_cloud.hpp"

namespace voxflow {

// Point-level confusion counts; row = ground truth, column = prediction.
// Points whose ground truth is kIgnoreLabel are excluded from scoring;
// predictions are never kIgnoreLabel.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;

  explicit ConfusionMatrix(int classes = 0)
      : num_classes(classes), counts(std::size_t(classes) * std::size_t(classes), 0) {}

  std::int64_t& at(int gt, int pred) {
    return counts[std::size_t(gt) * std::size_t(num_classes) + std::size_t(pred)];
  }
  std::int64_t at(int gt, int pred) const {
    return counts[std::size_t(gt) * std::size_t(num_classes) + std::size_t(pred)];
  }

  std::int64_t total() const {
    std::int64_t n = 0;
    for (std::int64_t c : counts) n += c;
    return n;
  }
};

inline void accumulate(ConfusionMatrix& cm, const std::vector<std::uint32_t>& pred,
                       const std::vector<std::uint32_t>& gt) {
  if (pred.size() != gt.size())
    throw InvalidInput("prediction and ground-truth lengths differ");
  const std::uint32_t c = std::uint32_t(cm.num_classes);
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (gt[k] == kIgnoreLabel) continue;
    if (gt[k] >= c) throw InvalidInput("ground-truth class out of range");
    if (pred[k] >= c)
      throw InvalidInput(pred[k] == kIgnoreLabel ? "prediction may not be the ignore label"
                                                 : "prediction class out of range");
    ++cm.at(int(gt[k]), int(pred[k]));
  }
}

// Elementwise addition; associative and commutative, so per-thread matrices
// merge in any order.
inline void merge(ConfusionMatrix& into, const ConfusionMatrix& other) {
  if (into.num_classes != other.num_classes)
    throw InvalidInput("confusion matrices have different class counts");
  for (std::size_t i = 0; i < into.counts.size(); ++i) into.counts[i] += other.counts[i];
}

// Per-class scores with NaN marking classes whose denominator is zero; such
// classes are excluded from the mean.
struct ClassScores {
  std::vector<double> per_class;
  double mean = 0.0;
  int defined = 0;

  bool is_defined(int c) const { return !std::isnan(per_class[std::size_t(c)]); }
};

namespace detail {

inline ClassScores mean_over_defined(std::vector<double> per_class, const char* metric) {
  ClassScores out;
  out.per_class = std::move(per_class);
  double sum = 0.0;
  for (double v : out.per_class) {
    if (std::isnan(v)) continue;
    sum += v;
    ++out.defined;
  }
  if (out.defined == 0) throw UndefinedMetric(std::string(metric) + " undefined: no scored class");
  out.mean = sum / out.defined;
  return out;
}

}  // namespace detail

// IoU_c = TP / (TP + FP + FN).
inline ClassScores miou(const ConfusionMatrix& cm) {
  std::vector<double> per_class(std::size_t(cm.num_classes),
                                std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < cm.num_classes; ++c) {
    const std::int64_t tp = cm.at(c, c);
    std::int64_t fp = 0, fn = 0;
    for (int o = 0; o < cm.num_classes; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const std::int64_t denom = tp + fp + fn;
    if (denom > 0) per_class[std::size_t(c)] = double(tp) / double(denom);
  }
  return detail::mean_over_defined(std::move(per_class), "mIoU");
}

// Acc_c = TP / row sum (per-class recall).
inline ClassScores macc(const ConfusionMatrix& cm) {
  std::vector<double> per_class(std::size_t(cm.num_classes),
                                std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < cm.num_classes; ++c) {
    std::int64_t row = 0;
    for (int o = 0; o < cm.num_classes; ++o) row += cm.at(c, o);
    if (row > 0) per_class[std::size_t(c)] = double(cm.at(c, c)) / double(row);
  }
  return detail::mean_over_defined(std::move(per_class), "mAcc");
}

}  // namespace voxflow
