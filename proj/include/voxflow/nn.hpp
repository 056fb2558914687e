#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "voxflow/sparse_tensor.hpp"

// Small neural-network helpers shared by the segmentor and test-time
// augmentation. The activation is SiLU (x * sigmoid(x)): smooth everywhere,
// which keeps finite-difference gradient checks clean at tight tolerances.

namespace voxflow {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename T>
Matrix<T> silu(const Matrix<T>& x) {
  Matrix<T> y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = double(x.data()[i]);
    y.data()[i] = T(v * sigmoid(v));
  }
  return y;
}

// d/dx silu(x) = s(x) * (1 + x * (1 - s(x)))
template <typename T>
Matrix<double> silu_derivative(const Matrix<T>& pre) {
  Matrix<double> d(pre.rows(), pre.cols());
  for (Eigen::Index i = 0; i < pre.size(); ++i) {
    const double v = double(pre.data()[i]);
    const double s = sigmoid(v);
    d.data()[i] = s * (1.0 + v * (1.0 - s));
  }
  return d;
}

// Numerically stable row-wise softmax.
inline Matrix<double> softmax_rows(const Matrix<double>& logits) {
  Matrix<double> p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const double e = std::exp(logits(i, c) - m);
      p(i, c) = e;
      sum += e;
    }
    p.row(i) /= sum;
  }
  return p;
}

inline double log_sum_exp_row(const Matrix<double>& logits, Eigen::Index i) {
  const double m = logits.row(i).maxCoeff();
  double sum = 0.0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) sum += std::exp(logits(i, c) - m);
  return m + std::log(sum);
}

// Argmax with ties broken toward the lowest class index.
template <typename T>
std::uint32_t argmax_row(const Matrix<T>& values, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < values.cols(); ++c)
    if (values(row, c) > values(row, best)) best = c;
  return std::uint32_t(best);
}

template <typename T>
std::vector<std::uint32_t> argmax_rows(const Matrix<T>& values) {
  std::vector<std::uint32_t> out(std::size_t(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) out[std::size_t(i)] = argmax_row(values, i);
  return out;
}

}  // namespace voxflow
