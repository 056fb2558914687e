#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "voxflow/config_json.hpp"
#include "voxflow/dataflows.hpp"
#include "voxflow/report.hpp"

// The run configuration consumed by every CLI subcommand. JSON schema (all
// fields optional, defaults shown in the README):
//
// {
//   "seed": 1, "threads": 1,
//   "dataset": {"type": "synthetic" | "kitti", "scene": {...}, "train_scenes": 8,
//               "heldout_scenes": 2, "dir": "...", "remap": "configs/....json"},
//   "segmentor": {"voxel": {...}, "widths": [...], "blocks": [...], "classes": C,
//                 "optim": {...}, "seed": S},
//   "augment": {"enabled": false, "operators": ["lasermix", "polarmix"],
//               "lasermix_bands": [3, 6], "polarmix_width": [w_lo, w_hi],
//               "frustummix_regions": [3, 4, 5], "global": true, "global_ranges": {...}},
//   "tta": {"flip": false, "rotate": false, "scale": false, "translate": false},
//   "bench": {"kernel_size": 3, "stride": 1, "in_channels": 16, "out_channels": 16,
//             "submanifold": true, "group_size": 32},
//   "dataflow": "all" | "auto" | <name>,
//   "repeats": 5, "train_steps": 200, "batch_size": 2,
//   "out": "report.txt", "checkpoint": "model.ckpt", "format": "text" | "csv"
// }

namespace voxflow {

struct DatasetConfig {
  enum class Type { Synthetic, Kitti };
  Type type = Type::Synthetic;
  SynthSceneConfig scene;
  int train_scenes = 8;
  int heldout_scenes = 2;
  std::string dir;         // kitti: directory with velodyne/ and labels/
  std::string remap_path;  // kitti: remap table json
};

struct MixPolicyConfig {
  bool enabled = false;
  std::vector<std::string> operators = {"lasermix", "polarmix"};
  std::array<int, 2> lasermix_bands = {3, 6};           // inclusive range
  std::array<double, 2> polarmix_width = {kPi / 4, kPi};
  std::vector<int> frustummix_regions = {3, 4, 5};
  bool global = true;
  GlobalAugRanges global_ranges;
};

struct BenchConfig {
  int kernel_size = 3;
  int stride = 1;
  int in_channels = 16;
  int out_channels = 16;
  bool submanifold = true;
  int group_size = 32;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  DatasetConfig dataset;
  SegmentorConfig segmentor;
  MixPolicyConfig augment;
  TTAConfig tta;
  BenchConfig bench;
  std::string dataflow = "all";  // "all", "auto", or one dataflow name
  int repeats = 5;
  int train_steps = 200;
  int batch_size = 2;
  std::string out_path = "report.txt";
  std::string checkpoint_path = "model.ckpt";
  std::string format = "text";

  void validate() const {
    if (repeats < 1) throw InvalidInput("repeats must be >= 1");
    if (threads < 1) throw InvalidInput("threads must be >= 1");
    if (train_steps < 0) throw InvalidInput("train_steps must be >= 0");
    if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
    (void)report_format_from_name(format);
    if (dataflow != "all" && dataflow != "auto" && !dataflow_from_name(dataflow))
      throw InvalidInput("unknown dataflow selection: " + dataflow);
    dataset.scene.validate();
    segmentor.validate();
    for (const auto& op : augment.operators)
      if (op != "lasermix" && op != "polarmix" && op != "frustummix")
        throw InvalidInput("unknown mix operator: " + op);
    if (augment.enabled && augment.operators.empty())
      throw InvalidInput("augmentation enabled with no operators");
    if (dataset.type == DatasetConfig::Type::Kitti) {
      if (!std::filesystem::exists(dataset.dir))
        throw InvalidInput("dataset directory does not exist: " + dataset.dir);
      if (!std::filesystem::exists(dataset.remap_path))
        throw InvalidInput("remap table does not exist: " + dataset.remap_path);
    }
  }
};

inline json to_json(const DatasetConfig& d) {
  return json{{"type", d.type == DatasetConfig::Type::Synthetic ? "synthetic" : "kitti"},
              {"scene", to_json(d.scene)},
              {"train_scenes", d.train_scenes},
              {"heldout_scenes", d.heldout_scenes},
              {"dir", d.dir},
              {"remap", d.remap_path}};
}

inline json to_json(const MixPolicyConfig& m) {
  return json{{"enabled", m.enabled},
              {"operators", m.operators},
              {"lasermix_bands", m.lasermix_bands},
              {"polarmix_width", m.polarmix_width},
              {"frustummix_regions", m.frustummix_regions},
              {"global", m.global},
              {"global_ranges", to_json(m.global_ranges)}};
}

inline json to_json(const BenchConfig& b) {
  return json{{"kernel_size", b.kernel_size}, {"stride", b.stride},
              {"in_channels", b.in_channels}, {"out_channels", b.out_channels},
              {"submanifold", b.submanifold}, {"group_size", b.group_size}};
}

inline json run_config_json(const RunConfig& cfg) {
  return json{{"seed", cfg.seed},
              {"threads", cfg.threads},
              {"dataset", to_json(cfg.dataset)},
              {"segmentor", to_json(cfg.segmentor)},
              {"augment", to_json(cfg.augment)},
              {"tta", to_json(cfg.tta)},
              {"bench", to_json(cfg.bench)},
              {"dataflow", cfg.dataflow},
              {"repeats", cfg.repeats},
              {"train_steps", cfg.train_steps},
              {"batch_size", cfg.batch_size},
              {"out", cfg.out_path},
              {"checkpoint", cfg.checkpoint_path},
              {"format", cfg.format}};
}

inline RunConfig parse_run_config(const json& j) {
  RunConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    const std::string type = d.value("type", std::string("synthetic"));
    if (type == "synthetic")
      cfg.dataset.type = DatasetConfig::Type::Synthetic;
    else if (type == "kitti")
      cfg.dataset.type = DatasetConfig::Type::Kitti;
    else
      throw InvalidInput("unknown dataset type: " + type);
    if (d.contains("scene")) cfg.dataset.scene = synth_config_from_json(d.at("scene"));
    cfg.dataset.train_scenes = d.value("train_scenes", cfg.dataset.train_scenes);
    cfg.dataset.heldout_scenes = d.value("heldout_scenes", cfg.dataset.heldout_scenes);
    cfg.dataset.dir = d.value("dir", cfg.dataset.dir);
    cfg.dataset.remap_path = d.value("remap", cfg.dataset.remap_path);
  }
  if (j.contains("segmentor")) cfg.segmentor = segmentor_config_from_json(j.at("segmentor"));
  if (j.contains("augment")) {
    const json& a = j.at("augment");
    cfg.augment.enabled = a.value("enabled", cfg.augment.enabled);
    if (a.contains("operators"))
      cfg.augment.operators = a.at("operators").get<std::vector<std::string>>();
    if (a.contains("lasermix_bands"))
      cfg.augment.lasermix_bands = a.at("lasermix_bands").get<std::array<int, 2>>();
    if (a.contains("polarmix_width"))
      cfg.augment.polarmix_width = a.at("polarmix_width").get<std::array<double, 2>>();
    if (a.contains("frustummix_regions"))
      cfg.augment.frustummix_regions = a.at("frustummix_regions").get<std::vector<int>>();
    cfg.augment.global = a.value("global", cfg.augment.global);
    if (a.contains("global_ranges"))
      cfg.augment.global_ranges = global_ranges_from_json(a.at("global_ranges"));
  }
  if (j.contains("tta")) cfg.tta = tta_config_from_json(j.at("tta"));
  if (j.contains("bench")) {
    const json& b = j.at("bench");
    cfg.bench.kernel_size = b.value("kernel_size", cfg.bench.kernel_size);
    cfg.bench.stride = b.value("stride", cfg.bench.stride);
    cfg.bench.in_channels = b.value("in_channels", cfg.bench.in_channels);
    cfg.bench.out_channels = b.value("out_channels", cfg.bench.out_channels);
    cfg.bench.submanifold = b.value("submanifold", cfg.bench.submanifold);
    cfg.bench.group_size = b.value("group_size", cfg.bench.group_size);
  }
  cfg.dataflow = j.value("dataflow", cfg.dataflow);
  cfg.repeats = j.value("repeats", cfg.repeats);
  cfg.train_steps = j.value("train_steps", cfg.train_steps);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.out_path = j.value("out", cfg.out_path);
  cfg.checkpoint_path = j.value("checkpoint", cfg.checkpoint_path);
  cfg.format = j.value("format", cfg.format);
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open run configuration: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("unparsable run configuration " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

inline LabelRemap load_label_remap(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open remap table: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("unparsable remap table " + path + ": " + e.what());
  }
  return label_remap_from_json(j);
}

inline std::string config_digest(const RunConfig& cfg) {
  return hex64(fnv1a64(run_config_json(cfg).dump()));
}

}  // namespace voxflow
