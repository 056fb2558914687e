#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "voxflow/geometry.hpp"
#include "voxflow/nn.hpp"
#include "voxflow/point_cloud.hpp"

// Test-time augmentation: a cartesian product of flip / rotate / scale /
// translate variant sets (4 x 3 x 3 x 3), per-point probability averaging
// across variants. Progressive enabling yields 1, 4, 12, 36, 108 variants.

namespace voxflow {

struct TTAConfig {
  bool flip = false;
  bool rotate = false;
  bool scale = false;
  bool translate = false;

  std::array<std::pair<bool, bool>, 4> flips{
      {{false, false}, {true, false}, {false, true}, {true, true}}};
  std::array<double, 3> rotations{-kPi / 4, 0.0, kPi / 4};
  std::array<double, 3> scales{0.95, 1.0, 1.05};
  std::array<Eigen::Vector3d, 3> translations{Eigen::Vector3d(-0.1, -0.1, 0.0),
                                              Eigen::Vector3d::Zero(),
                                              Eigen::Vector3d(0.1, 0.1, 0.0)};

  void validate() const {
    bool id_flip = false, id_rot = false, id_scale = false, id_trans = false;
    for (const auto& f : flips) id_flip |= (!f.first && !f.second);
    for (double r : rotations) id_rot |= (r == 0.0);
    for (double s : scales) id_scale |= (s == 1.0);
    for (const auto& t : translations) id_trans |= t.isZero(0.0);
    if (!id_flip || !id_rot || !id_scale || !id_trans)
      throw InvalidSpec("every tta variant set must contain its identity element");
  }

  int variant_count() const {
    return (flip ? int(flips.size()) : 1) * (rotate ? int(rotations.size()) : 1) *
           (scale ? int(scales.size()) : 1) * (translate ? int(translations.size()) : 1);
  }

  bool any_enabled() const { return flip || rotate || scale || translate; }
};

// Cartesian product in fixed order (flip-major); disabled sets contribute
// only their identity element.
inline std::vector<SimilarityTransform> enumerate_variants(const TTAConfig& cfg) {
  cfg.validate();
  const std::size_t nf = cfg.flip ? cfg.flips.size() : 1;
  const std::size_t nr = cfg.rotate ? cfg.rotations.size() : 1;
  const std::size_t ns = cfg.scale ? cfg.scales.size() : 1;
  const std::size_t nt = cfg.translate ? cfg.translations.size() : 1;

  std::vector<SimilarityTransform> variants;
  variants.reserve(nf * nr * ns * nt);
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t t = 0; t < nt; ++t) {
          SimilarityTransform v;
          if (cfg.flip) {
            v.flip_x = cfg.flips[f].first;
            v.flip_y = cfg.flips[f].second;
          }
          if (cfg.rotate) v.yaw = cfg.rotations[r];
          if (cfg.scale) v.scale = cfg.scales[s];
          if (cfg.translate) v.translation = cfg.translations[t];
          variants.push_back(v);
        }
  return variants;
}

// Runs the model on every variant, averages per-point softmax probabilities
// in variant order, and takes the argmax (ties toward the lowest class).
// Point identity is preserved by the transforms, so no geometric inverse is
// needed. `forward` maps a cloud to an N x C logit matrix.
template <typename ForwardFn>
std::vector<std::uint32_t> tta_predict(const PointCloud& cloud, ForwardFn&& forward,
                                       const TTAConfig& cfg) {
  const auto variants = enumerate_variants(cfg);
  Matrix<double> prob_sum;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    Matrix<double> logits;
    try {
      logits = forward(apply_transform(cloud, variants[v]));
    } catch (const std::exception& e) {
      throw Error("tta variant " + std::to_string(v) + " failed: " + e.what());
    }
    if (std::size_t(logits.rows()) != cloud.size())
      throw InvalidInput("tta variant " + std::to_string(v) + " returned wrong point count");
    const Matrix<double> probs = softmax_rows(logits);
    if (v == 0)
      prob_sum = probs;
    else
      prob_sum += probs;
  }
  prob_sum /= double(variants.size());
  return argmax_rows(prob_sum);
}

}  // namespace voxflow
