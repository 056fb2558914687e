#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "voxflow/sparse_tensor.hpp"

namespace voxflow {

struct AdamWConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  void validate() const {
    if (lr < 0.0) throw InvalidInput("learning rate must be non-negative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
      throw InvalidInput("moment decay rates must lie in [0, 1)");
    if (eps <= 0.0 || weight_decay < 0.0) throw InvalidInput("bad optimizer constants");
  }
};

// Adaptive-moment update with decoupled weight decay. Moments are kept in
// double precision; parameters are stored back in their own scalar type.
template <typename T>
struct AdamW {
  AdamWConfig cfg;
  std::int64_t t = 0;
  std::vector<Matrix<double>> m;
  std::vector<Matrix<double>> v;

  explicit AdamW(AdamWConfig c = {}) : cfg(c) { cfg.validate(); }

  void init(const std::vector<Matrix<T>*>& params) {
    m.clear();
    v.clear();
    for (const auto* p : params) {
      m.push_back(Matrix<double>::Zero(p->rows(), p->cols()));
      v.push_back(Matrix<double>::Zero(p->rows(), p->cols()));
    }
  }

  void step(const std::vector<Matrix<T>*>& params, const std::vector<Matrix<double>>& grads) {
    if (params.size() != grads.size() || params.size() != m.size())
      throw InvalidInput("optimizer state does not match parameter list");
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix<T>& p = *params[i];
      const Matrix<double>& g = grads[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i].array() = cfg.beta2 * v[i].array() + (1.0 - cfg.beta2) * g.array().square();
      const Matrix<double> m_hat = m[i] / bc1;
      const Matrix<double> v_hat = v[i] / bc2;
      Matrix<double> pd = p.template cast<double>();
      pd.array() -=
          cfg.lr * (m_hat.array() / (v_hat.array().sqrt() + cfg.eps) + cfg.weight_decay * pd.array());
      p = pd.template cast<T>();
    }
  }
};

}  // namespace voxflow
