#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "voxflow/conv_backward.hpp"
#include "voxflow/dataflows.hpp"
#include "voxflow/nn.hpp"
#include "voxflow/optimizer.hpp"
#include "voxflow/point_cloud.hpp"
#include "voxflow/voxel_grid.hpp"

// Miniature voxel segmentor: voxelization, cell-centered mean feature
// encoder, linear stem, a sparse U-Net of submanifold residual blocks with
// K=2 s=2 downsampling and coordinate-cached transposed upsampling with skip
// concatenation, and a linear decode head scattered back to points.
//
// Convolutions carry no bias terms; widths and block counts per level are the
// capacity knobs.

namespace voxflow {

struct SegmentorConfig {
  VoxelizationConfig<3> voxel{VoxelMode::Cartesian,
                              {-48.0, -48.0, -4.0},
                              {48.0, 48.0, 8.0},
                              {0.4, 0.4, 0.4},
                              OutOfBoundsPolicy::Drop};
  std::vector<int> widths = {8, 16};
  std::vector<int> blocks = {1, 1};
  int num_classes = 3;
  AdamWConfig optim;
  std::uint64_t seed = 1;

  int levels() const { return int(widths.size()); }

  void validate() const {
    voxel.validate();
    if (voxel.mode != VoxelMode::Cartesian)
      throw InvalidSpec("segmentor voxelization must be cartesian");
    if (widths.empty() || widths.size() != blocks.size())
      throw InvalidSpec("widths and blocks must be non-empty and equal length");
    for (int w : widths)
      if (w < 1) throw InvalidSpec("channel widths must be positive");
    for (int b : blocks)
      if (b < 1) throw InvalidSpec("block counts must be positive");
    if (num_classes < 2) throw InvalidSpec("need at least two classes");
    optim.validate();
  }
};

// Structural compatibility for checkpoints: everything that shapes the
// parameter vector or the input pipeline.
inline bool same_architecture(const SegmentorConfig& a, const SegmentorConfig& b) {
  return a.widths == b.widths && a.blocks == b.blocks && a.num_classes == b.num_classes &&
         a.voxel.mode == b.voxel.mode && a.voxel.lower == b.voxel.lower &&
         a.voxel.upper == b.voxel.upper && a.voxel.cell == b.voxel.cell &&
         a.voxel.out_of_bounds == b.voxel.out_of_bounds;
}

template <typename T>
class Segmentor {
 public:
  struct ResBlock {
    ConvSpec<T, 3> conv1;
    ConvSpec<T, 3> conv2;
  };

  explicit Segmentor(SegmentorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int levels = cfg_.levels();
    std::mt19937_64 rng(cfg_.seed);

    stem_ = Matrix<T>::Zero(4, cfg_.widths[0]);
    init_matrix(stem_, rng);

    enc_.resize(std::size_t(levels));
    for (int l = 0; l < levels; ++l) {
      const int w = cfg_.widths[std::size_t(l)];
      for (int b = 0; b < cfg_.blocks[std::size_t(l)]; ++b) {
        ResBlock block{make_conv_spec<T, 3>(3, 1, w, w, true),
                       make_conv_spec<T, 3>(3, 1, w, w, true)};
        init_weights(block.conv1, rng);
        init_weights(block.conv2, rng);
        enc_[std::size_t(l)].push_back(std::move(block));
      }
      if (l + 1 < levels) {
        auto down = make_conv_spec<T, 3>(2, 2, w, cfg_.widths[std::size_t(l) + 1], false);
        init_weights(down, rng);
        down_.push_back(std::move(down));
      }
    }

    // decoder stored in processing order, deepest target level first
    for (int l = levels - 2; l >= 0; --l) {
      auto up = make_conv_spec<T, 3>(2, 1, cfg_.widths[std::size_t(l) + 1],
                                     cfg_.widths[std::size_t(l)], false);
      init_weights(up, rng);
      up_.push_back(std::move(up));
      Matrix<T> fuse = Matrix<T>::Zero(2 * cfg_.widths[std::size_t(l)], cfg_.widths[std::size_t(l)]);
      init_matrix(fuse, rng);
      fuse_.push_back(std::move(fuse));
    }

    head_ = Matrix<T>::Zero(cfg_.widths[0], cfg_.num_classes);
    init_matrix(head_, rng);

    collect_params();
  }

  const SegmentorConfig& config() const { return cfg_; }

  std::vector<Matrix<T>*>& params() { return params_; }
  const std::vector<Matrix<T>*>& params() const { return params_; }
  const std::vector<std::string>& param_names() const { return param_names_; }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto* p : params_) n += p->size();
    return n;
  }

  struct BlockTrace {
    Matrix<T> x;    // block input
    Matrix<T> a1;   // conv1 pre-activation
    Matrix<T> s1;   // silu(a1)
    Matrix<T> sum;  // x + conv2(s1), pre-activation of the block output
  };

  struct LevelTrace {
    std::vector<Coord<3>> coords;
    KernelMap<3> subm_map;
    std::vector<BlockTrace> blocks;
    Matrix<T> enc_out;    // activations cached for the skip connection
    KernelMap<3> down_map;  // valid below the deepest level
    Matrix<T> down_pre;
  };

  struct DecoderTrace {
    KernelMap<3> up_map;
    Matrix<T> deep_in;
    Matrix<T> up_pre;
    Matrix<T> concat;
    Matrix<T> fuse_pre;
  };

  struct Trace {
    VoxelizeResult<3> vox;
    Matrix<T> f0;
    Matrix<T> stem_pre;
    std::vector<LevelTrace> levels;
    std::vector<DecoderTrace> decoder;  // index = target level
    Matrix<T> final_features;
    Matrix<T> voxel_logits;
    bool empty = false;
  };

  struct ForwardResult {
    Matrix<T> point_logits;
    Trace trace;
  };

  ForwardResult forward_traced(const PointCloud& cloud) const {
    ForwardResult fr;
    Trace& tr = fr.trace;
    tr.vox = voxelize(cloud, cfg_.voxel);
    const int levels = cfg_.levels();
    if (tr.vox.coords.empty()) {
      tr.empty = true;
      tr.voxel_logits = Matrix<T>::Zero(0, cfg_.num_classes);
      fr.point_logits = Matrix<T>::Zero(std::int64_t(cloud.size()), cfg_.num_classes);
      return fr;
    }

    tr.f0 = encode_voxel_features_centered<T>(cloud, tr.vox, cfg_.voxel);
    tr.stem_pre = mul(tr.f0, stem_);
    Matrix<T> h = silu(tr.stem_pre);

    std::vector<Coord<3>> coords = tr.vox.coords;
    std::int32_t stride = 1;
    tr.levels.resize(std::size_t(levels));
    for (int l = 0; l < levels; ++l) {
      LevelTrace& lt = tr.levels[std::size_t(l)];
      lt.coords = coords;
      lt.subm_map = build_kernel_map(coords, coords, enc_[std::size_t(l)].front().conv1);
      for (const ResBlock& block : enc_[std::size_t(l)]) {
        BlockTrace bt;
        bt.x = h;
        bt.a1 = conv_gather_scatter(tensor(bt.x, coords, stride), block.conv1, lt.subm_map).features;
        bt.s1 = silu(bt.a1);
        bt.sum =
            bt.x + conv_gather_scatter(tensor(bt.s1, coords, stride), block.conv2, lt.subm_map)
                       .features;
        h = silu(bt.sum);
        lt.blocks.push_back(std::move(bt));
      }
      lt.enc_out = h;
      if (l + 1 < levels) {
        const auto& down = down_[std::size_t(l)];
        lt.down_map = build_kernel_map(coords, output_coords(coords, down), down);
        lt.down_pre = conv_gather_scatter(tensor(h, coords, stride), down, lt.down_map).features;
        h = silu(lt.down_pre);
        coords = lt.down_map.out_coords;
        stride *= 2;
      }
    }

    tr.decoder.resize(std::size_t(std::max(levels - 1, 0)));
    for (int l = levels - 2; l >= 0; --l) {
      DecoderTrace& dt = tr.decoder[std::size_t(l)];
      const LevelTrace& lt = tr.levels[std::size_t(l)];
      dt.deep_in = h;
      dt.up_map = transpose_kernel_map(lt.down_map, lt.coords);
      dt.up_pre = conv_gather_scatter(tensor(h, coords, stride),
                                      up_[std::size_t(levels - 2 - l)], dt.up_map)
                      .features;
      const Matrix<T> up_act = silu(dt.up_pre);
      dt.concat.resize(up_act.rows(), up_act.cols() + lt.enc_out.cols());
      dt.concat << up_act, lt.enc_out;
      dt.fuse_pre = mul(dt.concat, fuse_[std::size_t(levels - 2 - l)]);
      h = silu(dt.fuse_pre);
      coords = lt.coords;
      stride /= 2;
    }

    tr.final_features = h;
    tr.voxel_logits = mul(h, head_);
    fr.point_logits = devoxelize_values(tr.voxel_logits, tr.vox.map);
    return fr;
  }

  Matrix<T> forward(const PointCloud& cloud) const { return forward_traced(cloud).point_logits; }

  // Parameter gradients (aligned with params()) for an upstream gradient on
  // the voxel logits.
  std::vector<Matrix<double>> backward(const Trace& tr, const Matrix<double>& grad_voxel_logits) const {
    std::vector<Matrix<double>> grads;
    grads.reserve(params_.size());
    for (const auto* p : params_) grads.push_back(Matrix<double>::Zero(p->rows(), p->cols()));
    if (tr.empty) return grads;
    const int levels = cfg_.levels();

    grads[index_of(&head_)] = tr.final_features.template cast<double>().transpose() * grad_voxel_logits;
    Matrix<double> g = grad_voxel_logits * head_.template cast<double>().transpose();

    // decoder backward, shallowest target level first
    std::vector<Matrix<double>> skip_grads(std::size_t(std::max(levels - 1, 0)));
    for (int l = 0; l <= levels - 2; ++l) {
      const DecoderTrace& dt = tr.decoder[std::size_t(l)];
      const std::size_t dec = std::size_t(levels - 2 - l);
      const int w = cfg_.widths[std::size_t(l)];

      const Matrix<double> g_fuse_pre = g.cwiseProduct(silu_derivative(dt.fuse_pre));
      grads[index_of(&fuse_[dec])] = dt.concat.template cast<double>().transpose() * g_fuse_pre;
      const Matrix<double> g_concat = g_fuse_pre * fuse_[dec].template cast<double>().transpose();
      skip_grads[std::size_t(l)] = g_concat.rightCols(w);
      const Matrix<double> g_up_pre =
          Matrix<double>(g_concat.leftCols(w)).cwiseProduct(silu_derivative(dt.up_pre));

      const auto cg = conv_backward(tensor_from_double(g_up_pre, dt.up_map.out_coords),
                                    tensor(dt.deep_in, {}, 1, std::int64_t(dt.deep_in.rows())),
                                    up_[dec], dt.up_map);
      for (int b = 0; b < up_[dec].num_offsets(); ++b)
        grads[index_of(&up_[dec].weights[std::size_t(b)])] = cg.weights[std::size_t(b)];
      g = cg.input;
    }

    // encoder backward, deepest level first
    for (int l = levels - 1; l >= 0; --l) {
      const LevelTrace& lt = tr.levels[std::size_t(l)];
      for (std::size_t b = lt.blocks.size(); b-- > 0;) {
        const BlockTrace& bt = lt.blocks[b];
        const ResBlock& block = enc_[std::size_t(l)][b];
        const Matrix<double> g_sum = g.cwiseProduct(silu_derivative(bt.sum));
        const auto cg2 = conv_backward(tensor_from_double(g_sum, lt.coords),
                                       tensor(bt.s1, lt.coords, 1), block.conv2, lt.subm_map);
        for (int o = 0; o < block.conv2.num_offsets(); ++o)
          grads[index_of(&block.conv2.weights[std::size_t(o)])] = cg2.weights[std::size_t(o)];
        const Matrix<double> g_a1 = cg2.input.cwiseProduct(silu_derivative(bt.a1));
        const auto cg1 = conv_backward(tensor_from_double(g_a1, lt.coords),
                                       tensor(bt.x, lt.coords, 1), block.conv1, lt.subm_map);
        for (int o = 0; o < block.conv1.num_offsets(); ++o)
          grads[index_of(&block.conv1.weights[std::size_t(o)])] = cg1.weights[std::size_t(o)];
        g = g_sum + cg1.input;  // identity branch plus conv branch
      }
      if (l > 0) {
        const LevelTrace& prev = tr.levels[std::size_t(l - 1)];
        const Matrix<double> g_down_pre = g.cwiseProduct(silu_derivative(prev.down_pre));
        const auto cg = conv_backward(tensor_from_double(g_down_pre, prev.down_map.out_coords),
                                      tensor(prev.enc_out, prev.coords, 1), down_[std::size_t(l - 1)],
                                      prev.down_map);
        for (int o = 0; o < down_[std::size_t(l - 1)].num_offsets(); ++o)
          grads[index_of(&down_[std::size_t(l - 1)].weights[std::size_t(o)])] =
              cg.weights[std::size_t(o)];
        g = cg.input + skip_grads[std::size_t(l - 1)];
      } else {
        const Matrix<double> g_stem_pre = g.cwiseProduct(silu_derivative(tr.stem_pre));
        grads[index_of(&stem_)] = tr.f0.template cast<double>().transpose() * g_stem_pre;
      }
    }
    return grads;
  }

  std::vector<std::uint32_t> predict(const PointCloud& cloud) const {
    return argmax_rows(forward(cloud));
  }

 private:
  static void init_matrix(Matrix<T>& m, std::mt19937_64& rng) {
    const double bound = std::sqrt(1.0 / double(m.rows()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = T(u(rng));
  }

  static Matrix<T> mul(const Matrix<T>& a, const Matrix<T>& b) {
    return (a.template cast<double>() * b.template cast<double>()).template cast<T>();
  }

  // Wraps features in a tensor view for the conv entry points. Coordinates
  // are only read for validation, so an empty list with an explicit row count
  // is enough where no coordinates are at hand.
  static SparseTensor<T, 3> tensor(const Matrix<T>& features, const std::vector<Coord<3>>& coords,
                                   std::int32_t stride, std::int64_t rows = -1) {
    SparseTensor<T, 3> t;
    if (!coords.empty()) {
      t.coords = coords;
    } else {
      const std::int64_t n = rows >= 0 ? rows : features.rows();
      t.coords.resize(std::size_t(n));
      for (std::int64_t i = 0; i < n; ++i) t.coords[std::size_t(i)] = {std::int32_t(i), 0, 0};
    }
    t.features = features;
    t.stride = stride;
    return t;
  }

  static SparseTensor<T, 3> tensor_from_double(const Matrix<double>& features,
                                               const std::vector<Coord<3>>& coords) {
    return tensor(features.template cast<T>(), coords, 1);
  }

  void collect_params() {
    params_.clear();
    param_names_.clear();
    auto add = [&](Matrix<T>* m, std::string name) {
      index_[m] = params_.size();
      params_.push_back(m);
      param_names_.push_back(std::move(name));
    };
    add(&stem_, "stem");
    for (std::size_t l = 0; l < enc_.size(); ++l) {
      for (std::size_t b = 0; b < enc_[l].size(); ++b) {
        auto& block = enc_[l][b];
        const std::string base = "enc" + std::to_string(l) + ".block" + std::to_string(b);
        for (std::size_t o = 0; o < block.conv1.weights.size(); ++o)
          add(&block.conv1.weights[o], base + ".conv1.w" + std::to_string(o));
        for (std::size_t o = 0; o < block.conv2.weights.size(); ++o)
          add(&block.conv2.weights[o], base + ".conv2.w" + std::to_string(o));
      }
      if (l < down_.size())
        for (std::size_t o = 0; o < down_[l].weights.size(); ++o)
          add(&down_[l].weights[o], "down" + std::to_string(l) + ".w" + std::to_string(o));
    }
    for (std::size_t d = 0; d < up_.size(); ++d) {
      for (std::size_t o = 0; o < up_[d].weights.size(); ++o)
        add(&up_[d].weights[o], "up" + std::to_string(d) + ".w" + std::to_string(o));
      add(&fuse_[d], "fuse" + std::to_string(d));
    }
    add(&head_, "head");
  }

  std::size_t index_of(const Matrix<T>* m) const { return index_.at(const_cast<Matrix<T>*>(m)); }

  SegmentorConfig cfg_;
  Matrix<T> stem_;
  std::vector<std::vector<ResBlock>> enc_;
  std::vector<ConvSpec<T, 3>> down_;
  std::vector<ConvSpec<T, 3>> up_;    // processing order: deepest target level first
  std::vector<Matrix<T>> fuse_;
  Matrix<T> head_;

  std::vector<Matrix<T>*> params_;
  std::vector<std::string> param_names_;
  std::unordered_map<Matrix<T>*, std::size_t> index_;
};

// Softmax cross-entropy over points; kIgnoreLabel points contribute nothing.
// scored == 0 flags the degenerate all-ignored case (loss 0 by convention).
struct LossValue {
  double value = 0.0;
  std::int64_t scored = 0;
};

template <typename T>
LossValue softmax_cross_entropy(const Matrix<T>& point_logits,
                                const std::vector<std::uint32_t>& labels) {
  if (std::size_t(point_logits.rows()) != labels.size())
    throw InvalidInput("logit row count does not match label count");
  const std::uint32_t classes = std::uint32_t(point_logits.cols());
  const Matrix<double> logits = point_logits.template cast<double>();
  LossValue out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kIgnoreLabel) continue;
    if (labels[i] >= classes) throw InvalidInput("label class out of range");
    out.value += log_sum_exp_row(logits, Eigen::Index(i)) - logits(Eigen::Index(i), labels[i]);
    ++out.scored;
  }
  if (out.scored > 0) out.value /= double(out.scored);
  return out;
}

// Loss plus its gradient on the voxel logits. Point logits are their voxel's
// row, so each scored point adds (softmax - onehot) / scored to its voxel;
// dropped points have zero logits and no parameter dependence, contributing
// ln(C) to the loss and nothing to the gradient.
struct VoxelLossGrad {
  double value = 0.0;
  std::int64_t scored = 0;
  Matrix<double> grad_voxel_logits;
};

template <typename T>
VoxelLossGrad voxel_loss_grad(const Matrix<T>& voxel_logits,
                              const std::vector<std::uint32_t>& point_labels,
                              const PointToCellMap& map) {
  if (point_labels.size() != map.cell_of_point.size())
    throw InconsistentMap("label count does not match point map");
  const std::uint32_t classes = std::uint32_t(voxel_logits.cols());
  const Matrix<double> logits = voxel_logits.template cast<double>();
  const Matrix<double> probs = softmax_rows(logits);

  VoxelLossGrad out;
  out.grad_voxel_logits = Matrix<double>::Zero(voxel_logits.rows(), voxel_logits.cols());
  for (std::size_t i = 0; i < point_labels.size(); ++i) {
    const std::uint32_t y = point_labels[i];
    if (y == kIgnoreLabel) continue;
    if (y >= classes) throw InvalidInput("label class out of range");
    ++out.scored;
    const std::int32_t cell = map.cell_of_point[i];
    if (cell < 0) {
      out.value += std::log(double(classes));
      continue;
    }
    out.value += log_sum_exp_row(logits, cell) - logits(cell, y);
    out.grad_voxel_logits.row(cell) += probs.row(cell);
    out.grad_voxel_logits(cell, y) -= 1.0;
  }
  if (out.scored > 0) {
    out.value /= double(out.scored);
    out.grad_voxel_logits /= double(out.scored);
  }
  return out;
}

// One optimizer step over a batch of labeled clouds; gradients are averaged
// across the batch. Deterministic for a fixed seed in single-threaded mode.
template <typename T>
class Trainer {
 public:
  explicit Trainer(SegmentorConfig cfg) : model_(std::move(cfg)), opt_(model_.config().optim) {
    opt_.init(model_.params());
  }

  Segmentor<T>& model() { return model_; }
  const Segmentor<T>& model() const { return model_; }
  std::int64_t steps_done() const { return step_; }

  double train_step(const std::vector<const PointCloud*>& batch) {
    if (batch.empty()) throw InvalidInput("empty training batch");
    std::vector<Matrix<double>> grad_sum;
    for (const auto* p : model_.params())
      grad_sum.push_back(Matrix<double>::Zero(p->rows(), p->cols()));
    double loss = 0.0;
    for (const PointCloud* cloud : batch) {
      if (!cloud->has_labels()) throw MissingLabels("training cloud has no labels");
      const auto fr = model_.forward_traced(*cloud);
      const auto lg = voxel_loss_grad(fr.trace.voxel_logits, *cloud->labels, fr.trace.vox.map);
      loss += lg.value;
      const auto grads = model_.backward(fr.trace, lg.grad_voxel_logits);
      for (std::size_t i = 0; i < grads.size(); ++i) grad_sum[i] += grads[i];
    }
    const double inv = 1.0 / double(batch.size());
    loss *= inv;
    for (auto& g : grad_sum) g *= inv;
    if (!std::isfinite(loss)) throw DivergenceError(step_, "non-finite loss");
    opt_.step(model_.params(), grad_sum);
    ++step_;
    return loss;
  }

 private:
  Segmentor<T> model_;
  AdamW<T> opt_;
  std::int64_t step_ = 0;
};

}  // namespace voxflow
