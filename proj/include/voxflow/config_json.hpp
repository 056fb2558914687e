#pragma once

#include <string>

#include <json.hpp>

#include "voxflow/label_remap.hpp"
#include "voxflow/mix_augment.hpp"
#include "voxflow/segmentor.hpp"
#include "voxflow/synth_scene.hpp"
#include "voxflow/tta.hpp"
#include "voxflow/voxel_grid.hpp"

// JSON (de)serialization for the configuration structs. Parsers fill in
// defaults for missing fields; dumps are canonical (nlohmann sorts object
// keys), which makes config echoes and digests stable.

namespace voxflow {

using json = nlohmann::json;

inline std::string voxel_mode_name(VoxelMode m) {
  switch (m) {
    case VoxelMode::Cartesian: return "cartesian";
    case VoxelMode::Cylindrical: return "cylindrical";
    case VoxelMode::PolarBev: return "polar-bev";
  }
  return "cartesian";
}

inline VoxelMode voxel_mode_from_name(const std::string& s) {
  if (s == "cartesian") return VoxelMode::Cartesian;
  if (s == "cylindrical") return VoxelMode::Cylindrical;
  if (s == "polar-bev") return VoxelMode::PolarBev;
  throw InvalidSpec("unknown voxelization mode: " + s);
}

inline json to_json(const VoxelizationConfig<3>& cfg) {
  return json{{"mode", voxel_mode_name(cfg.mode)},
              {"lower", cfg.lower},
              {"upper", cfg.upper},
              {"cell", cfg.cell},
              {"out_of_bounds", cfg.out_of_bounds == OutOfBoundsPolicy::Drop ? "drop" : "clamp"}};
}

inline VoxelizationConfig<3> voxel_config_from_json(const json& j,
                                                    const VoxelizationConfig<3>& defaults = {}) {
  VoxelizationConfig<3> cfg = defaults;
  if (j.contains("mode")) cfg.mode = voxel_mode_from_name(j.at("mode").get<std::string>());
  if (j.contains("lower")) cfg.lower = j.at("lower").get<std::array<double, 3>>();
  if (j.contains("upper")) cfg.upper = j.at("upper").get<std::array<double, 3>>();
  if (j.contains("cell")) cfg.cell = j.at("cell").get<std::array<double, 3>>();
  if (j.contains("out_of_bounds")) {
    const std::string policy = j.at("out_of_bounds").get<std::string>();
    if (policy == "drop")
      cfg.out_of_bounds = OutOfBoundsPolicy::Drop;
    else if (policy == "clamp")
      cfg.out_of_bounds = OutOfBoundsPolicy::Clamp;
    else
      throw InvalidSpec("unknown out-of-bounds policy: " + policy);
  }
  cfg.validate();
  return cfg;
}

inline json to_json(const AdamWConfig& cfg) {
  return json{{"lr", cfg.lr},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2},
              {"eps", cfg.eps},
              {"weight_decay", cfg.weight_decay}};
}

inline AdamWConfig adamw_from_json(const json& j, const AdamWConfig& defaults = {}) {
  AdamWConfig cfg = defaults;
  cfg.lr = j.value("lr", cfg.lr);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.beta2 = j.value("beta2", cfg.beta2);
  cfg.eps = j.value("eps", cfg.eps);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.validate();
  return cfg;
}

inline json to_json(const SegmentorConfig& cfg) {
  return json{{"voxel", to_json(cfg.voxel)}, {"widths", cfg.widths},
              {"blocks", cfg.blocks},        {"classes", cfg.num_classes},
              {"optim", to_json(cfg.optim)}, {"seed", cfg.seed}};
}

inline SegmentorConfig segmentor_config_from_json(const json& j,
                                                  const SegmentorConfig& defaults = {}) {
  SegmentorConfig cfg = defaults;
  if (j.contains("voxel")) cfg.voxel = voxel_config_from_json(j.at("voxel"), cfg.voxel);
  if (j.contains("widths")) cfg.widths = j.at("widths").get<std::vector<int>>();
  if (j.contains("blocks")) cfg.blocks = j.at("blocks").get<std::vector<int>>();
  cfg.num_classes = j.value("classes", cfg.num_classes);
  if (j.contains("optim")) cfg.optim = adamw_from_json(j.at("optim"), cfg.optim);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

inline json to_json(const SynthSceneConfig& cfg) {
  return json{{"ground_patches", cfg.ground_patches},
              {"boxes", cfg.boxes},
              {"poles", cfg.poles},
              {"beams", cfg.beams},
              {"points_per_beam", cfg.points_per_beam},
              {"extent", cfg.extent},
              {"seed", cfg.seed}};
}

inline SynthSceneConfig synth_config_from_json(const json& j,
                                               const SynthSceneConfig& defaults = {}) {
  SynthSceneConfig cfg = defaults;
  cfg.ground_patches = j.value("ground_patches", cfg.ground_patches);
  cfg.boxes = j.value("boxes", cfg.boxes);
  cfg.poles = j.value("poles", cfg.poles);
  cfg.beams = j.value("beams", cfg.beams);
  cfg.points_per_beam = j.value("points_per_beam", cfg.points_per_beam);
  cfg.extent = j.value("extent", cfg.extent);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

inline json to_json(const TTAConfig& cfg) {
  return json{{"flip", cfg.flip},
              {"rotate", cfg.rotate},
              {"scale", cfg.scale},
              {"translate", cfg.translate}};
}

inline TTAConfig tta_config_from_json(const json& j, const TTAConfig& defaults = {}) {
  TTAConfig cfg = defaults;
  cfg.flip = j.value("flip", cfg.flip);
  cfg.rotate = j.value("rotate", cfg.rotate);
  cfg.scale = j.value("scale", cfg.scale);
  cfg.translate = j.value("translate", cfg.translate);
  return cfg;
}

inline json to_json(const GlobalAugRanges& r) {
  return json{{"yaw", {r.yaw_min, r.yaw_max}},
              {"scale", {r.scale_min, r.scale_max}},
              {"flip_x_prob", r.flip_x_prob},
              {"flip_y_prob", r.flip_y_prob},
              {"translate_min", {r.translate_min.x(), r.translate_min.y(), r.translate_min.z()}},
              {"translate_max", {r.translate_max.x(), r.translate_max.y(), r.translate_max.z()}}};
}

inline GlobalAugRanges global_ranges_from_json(const json& j, const GlobalAugRanges& defaults = {}) {
  GlobalAugRanges r = defaults;
  if (j.contains("yaw")) {
    r.yaw_min = j.at("yaw").at(0).get<double>();
    r.yaw_max = j.at("yaw").at(1).get<double>();
  }
  if (j.contains("scale")) {
    r.scale_min = j.at("scale").at(0).get<double>();
    r.scale_max = j.at("scale").at(1).get<double>();
  }
  r.flip_x_prob = j.value("flip_x_prob", r.flip_x_prob);
  r.flip_y_prob = j.value("flip_y_prob", r.flip_y_prob);
  if (j.contains("translate_min")) {
    const auto v = j.at("translate_min").get<std::array<double, 3>>();
    r.translate_min = Eigen::Vector3d(v[0], v[1], v[2]);
  }
  if (j.contains("translate_max")) {
    const auto v = j.at("translate_max").get<std::array<double, 3>>();
    r.translate_max = Eigen::Vector3d(v[0], v[1], v[2]);
  }
  r.validate();
  return r;
}

// Remap table file: {"num_classes": C, "map": {"raw": eval, ...},
// "ignore": [raw, ...]}.
inline LabelRemap label_remap_from_json(const json& j) {
  LabelRemap rm;
  rm.num_classes = j.at("num_classes").get<std::uint32_t>();
  for (const auto& [key, value] : j.at("map").items())
    rm.table[std::uint32_t(std::stoul(key))] = value.get<std::uint32_t>();
  if (j.contains("ignore"))
    for (const auto& raw : j.at("ignore")) rm.table[raw.get<std::uint32_t>()] = kIgnoreLabel;
  rm.validate();
  return rm;
}

}  // namespace voxflow
