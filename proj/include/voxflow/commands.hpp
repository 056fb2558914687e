#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "voxflow/autotune.hpp"
#include "voxflow/checkpoint.hpp"
#include "voxflow/metrics.hpp"
#include "voxflow/mix_augment.hpp"
#include "voxflow/run_config.hpp"
#include "voxflow/tta.hpp"

// Subcommand implementations behind the CLI. Each builds a Report, writes it
// to the configured output path, and returns enough state for callers to
// introspect. Correctness gates performance: bench refuses to time dataflows
// whose outputs disagree.

namespace voxflow {

inline constexpr double kEquivalenceTolerance = 1e-5;

// The benchmark gate: timing is refused when dataflow outputs disagree.
inline void require_equivalent(double max_deviation) {
  if (max_deviation > kEquivalenceTolerance) throw EquivalenceFailure(max_deviation);
}

// ---------------------------------------------------------------------------
// dataset assembly

inline std::vector<PointCloud> load_kitti_scenes(const std::string& dir,
                                                 const std::string& remap_path, int limit) {
  namespace fs = std::filesystem;
  const LabelRemap rm = load_label_remap(remap_path);
  std::vector<fs::path> scans;
  for (const auto& entry : fs::directory_iterator(fs::path(dir) / "velodyne"))
    if (entry.path().extension() == ".bin") scans.push_back(entry.path());
  std::sort(scans.begin(), scans.end());
  if (limit >= 0 && int(scans.size()) > limit) scans.resize(std::size_t(limit));

  std::vector<PointCloud> scenes;
  for (const auto& scan_path : scans) {
    PointCloud cloud = read_scan(load_bytes(scan_path.string()));
    fs::path label_path = fs::path(dir) / "labels" / scan_path.filename();
    label_path.replace_extension(".label");
    if (fs::exists(label_path)) {
      const LabelArrays raw = read_labels(load_bytes(label_path.string()));
      if (raw.semantic.size() != cloud.size())
        throw MalformedLabel("label count does not match scan " + scan_path.string());
      cloud.labels = remap(raw.semantic, rm);
    }
    scenes.push_back(std::move(cloud));
  }
  return scenes;
}

inline std::vector<PointCloud> load_train_scenes(const RunConfig& cfg) {
  std::vector<PointCloud> scenes;
  if (cfg.dataset.type == DatasetConfig::Type::Synthetic) {
    for (int i = 0; i < cfg.dataset.train_scenes; ++i) {
      SynthSceneConfig sc = cfg.dataset.scene;
      sc.seed = cfg.dataset.scene.seed + std::uint64_t(i);
      scenes.push_back(synth_scene(sc));
    }
  } else {
    scenes = load_kitti_scenes(cfg.dataset.dir, cfg.dataset.remap_path, cfg.dataset.train_scenes);
  }
  return scenes;
}

inline std::vector<PointCloud> load_heldout_scenes(const RunConfig& cfg) {
  std::vector<PointCloud> scenes;
  if (cfg.dataset.type == DatasetConfig::Type::Synthetic) {
    for (int i = 0; i < cfg.dataset.heldout_scenes; ++i) {
      SynthSceneConfig sc = cfg.dataset.scene;
      sc.seed = cfg.dataset.scene.seed + 10007 + std::uint64_t(i);  // disjoint from training
      scenes.push_back(synth_scene(sc));
    }
  } else {
    auto all = load_kitti_scenes(cfg.dataset.dir, cfg.dataset.remap_path,
                                 cfg.dataset.train_scenes + cfg.dataset.heldout_scenes);
    const std::size_t skip = std::min(all.size(), std::size_t(cfg.dataset.train_scenes));
    scenes.assign(all.begin() + std::ptrdiff_t(skip), all.end());
  }
  return scenes;
}

// ---------------------------------------------------------------------------
// mixing policy

// Picks one operator per pair uniformly under the policy rng and draws its
// parameters; returns the two mixed clouds.
inline std::pair<PointCloud, PointCloud> apply_mix_policy(const PointCloud& a, const PointCloud& b,
                                                          const MixPolicyConfig& policy,
                                                          std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, policy.operators.size() - 1);
  const std::string& op = policy.operators[pick(rng)];
  std::uniform_int_distribution<int> axis_pick(0, 1);
  const AngularAxis axis = axis_pick(rng) == 0 ? AngularAxis::Inclination : AngularAxis::Azimuth;
  const std::uint64_t op_seed = rng();

  MixResult mix;
  if (op == "lasermix") {
    std::uniform_int_distribution<int> bands(policy.lasermix_bands[0], policy.lasermix_bands[1]);
    mix = lasermix(a, b, axis, bands(rng), op_seed);
  } else if (op == "polarmix") {
    std::uniform_real_distribution<double> start(-kPi, kPi);
    std::uniform_real_distribution<double> width(policy.polarmix_width[0],
                                                 policy.polarmix_width[1]);
    const double s = start(rng);
    mix = polarmix_scene(a, b, s, width(rng), op_seed);
  } else if (op == "frustummix") {
    mix = frustummix(a, b, axis, policy.frustummix_regions, op_seed);
  } else {
    throw InvalidInput("unknown mix operator: " + op);
  }
  return {std::move(mix.mixed_a), std::move(mix.mixed_b)};
}

inline void put_environment(Report& report, const RunConfig& cfg, const char* command) {
  report.put("run.command", command);
  report.put("run.seed", std::int64_t(cfg.seed));
  report.put("run.threads", cfg.threads);
  report.put("run.config_digest", config_digest(cfg));
}

// ---------------------------------------------------------------------------
// bench-dataflows

struct BenchOutcome {
  Report report;
  std::vector<AutotuneEntry> timings;
  Dataflow chosen = Dataflow::GatherScatter;
  bool auto_selected = false;
};

inline BenchOutcome cmd_bench_dataflows(const RunConfig& cfg) {
  cfg.validate();

  // workload: coordinates from the configured scene, seeded random features
  const std::vector<PointCloud> scenes = cfg.dataset.type == DatasetConfig::Type::Synthetic
                                             ? std::vector<PointCloud>{synth_scene(cfg.dataset.scene)}
                                             : load_kitti_scenes(cfg.dataset.dir,
                                                                 cfg.dataset.remap_path, 1);
  if (scenes.empty() || scenes.front().empty()) throw InvalidInput("benchmark workload is empty");
  const PointCloud& scene = scenes.front();
  const auto vox = voxelize(scene, cfg.segmentor.voxel);

  std::mt19937_64 rng(cfg.seed);
  auto spec = make_conv_spec<float, 3>(cfg.bench.kernel_size, cfg.bench.stride,
                                       cfg.bench.in_channels, cfg.bench.out_channels,
                                       cfg.bench.submanifold);
  init_weights(spec, rng);
  SparseTensor<float, 3> x;
  x.coords = vox.coords;
  x.features = Matrix<float>(std::int64_t(vox.coords.size()), cfg.bench.in_channels);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index i = 0; i < x.features.size(); ++i) x.features.data()[i] = float(gauss(rng));

  const auto out = output_coords(x.coords, spec);
  const KernelMap<3> map = build_kernel_map(x.coords, out, spec);

  std::vector<Dataflow> candidates;
  if (cfg.dataflow == "all" || cfg.dataflow == "auto") {
    candidates = applicable_dataflows(spec);
  } else {
    candidates = {*dataflow_from_name(cfg.dataflow)};
  }

  // correctness gate before any timing, single-threaded
  const auto reference = conv_gather_scatter(x, spec, map);
  double worst = 0.0;
  for (Dataflow f : candidates) {
    if (f == Dataflow::GatherScatter) continue;
    worst = std::max(worst, max_rel_deviation(run_dataflow(f, x, spec, map, cfg.bench.group_size),
                                              reference));
  }
  require_equivalent(worst);

  const AutotuneResult tuned = autotune(spec, x, cfg.repeats, candidates, cfg.bench.group_size);
  const auto implicit = conv_implicit_sorted(x, spec, map, cfg.bench.group_size);

  BenchOutcome outcome;
  outcome.timings = tuned.table;
  outcome.chosen = tuned.chosen;
  outcome.auto_selected = cfg.dataflow == "auto";

  Report& report = outcome.report;
  put_environment(report, cfg, "bench-dataflows");
  report.put("workload.points", std::int64_t(scene.size()));
  report.put("workload.voxels", std::int64_t(vox.coords.size()));
  report.put("workload.occupancy", occupancy(cfg.segmentor.voxel, vox.coords.size()));
  report.put("workload.kernel_size", cfg.bench.kernel_size);
  report.put("workload.stride", cfg.bench.stride);
  report.put("workload.in_channels", cfg.bench.in_channels);
  report.put("workload.out_channels", cfg.bench.out_channels);
  report.put("workload.submanifold", cfg.bench.submanifold ? "true" : "false");
  report.put("map.output_coords", std::int64_t(map.out_coords.size()));
  report.put("map.total_pairs", map.total_pairs());
  report.put("map.gather_elems", map.total_pairs() * cfg.bench.in_channels);
  report.put("map.scatter_elems", map.total_pairs() * cfg.bench.out_channels);
  report.put("equivalence.max_rel_deviation", worst);
  report.put("equivalence.tolerance", kEquivalenceTolerance);
  report.put("implicit.group_size", implicit.stats.group_size);
  report.put("implicit.groups", implicit.stats.groups);
  report.put("implicit.exact_macs", implicit.stats.exact_macs);
  report.put("implicit.padded_macs_sorted", implicit.stats.padded_macs_sorted);
  report.put("implicit.padded_macs_unsorted", implicit.stats.padded_macs_unsorted);
  report.put("implicit.sorted_reduction",
             double(implicit.stats.padded_macs_unsorted) /
                 double(std::max<std::int64_t>(implicit.stats.padded_macs_sorted, 1)));
  if (outcome.auto_selected) report.put("autotune.chosen", dataflow_name(tuned.chosen));

  auto& table = report.add_table(
      "dataflows", {"dataflow", "median_s", "min_s", "max_s", "scans_per_s", "repeats"});
  for (const auto& entry : tuned.table)
    table.rows.push_back({dataflow_name(entry.flow), format_double(entry.timing.median_s),
                          format_double(entry.timing.min_s), format_double(entry.timing.max_s),
                          format_double(1.0 / entry.timing.median_s),
                          std::to_string(entry.timing.repeats)});

  emit_report(report, report_format_from_name(cfg.format), cfg.out_path);
  return outcome;
}

// ---------------------------------------------------------------------------
// train

struct TrainOutcome {
  Report report;
  std::vector<double> loss_trace;
  double iter_per_s = 0.0;
};

inline TrainOutcome cmd_train(const RunConfig& cfg) {
  cfg.validate();
  const std::vector<PointCloud> scenes = load_train_scenes(cfg);
  if (scenes.empty()) throw InvalidInput("no training scenes");
  for (const auto& s : scenes)
    if (!s.has_labels()) throw MissingLabels("training scene has no labels");

  Trainer<float> trainer(cfg.segmentor);
  std::mt19937_64 aug_rng(cfg.seed);

  TrainOutcome outcome;
  outcome.loss_trace.reserve(std::size_t(cfg.train_steps));
  const double t0 = now_seconds();
  std::size_t cursor = 0;
  for (int step = 0; step < cfg.train_steps; ++step) {
    std::vector<PointCloud> batch_storage;
    std::vector<const PointCloud*> batch;
    batch_storage.reserve(std::size_t(cfg.batch_size));
    while (int(batch_storage.size()) < cfg.batch_size) {
      if (cfg.augment.enabled && cfg.batch_size - int(batch_storage.size()) >= 2) {
        const PointCloud& a = scenes[cursor++ % scenes.size()];
        const PointCloud& b = scenes[cursor++ % scenes.size()];
        auto [ma, mb] = apply_mix_policy(a, b, cfg.augment, aug_rng);
        batch_storage.push_back(std::move(ma));
        batch_storage.push_back(std::move(mb));
      } else {
        batch_storage.push_back(scenes[cursor++ % scenes.size()]);
      }
    }
    if (cfg.augment.enabled && cfg.augment.global)
      for (auto& cloud : batch_storage)
        cloud = random_global_aug(cloud, cfg.augment.global_ranges, aug_rng());
    for (const auto& cloud : batch_storage) batch.push_back(&cloud);
    outcome.loss_trace.push_back(trainer.train_step(batch));
  }
  const double elapsed = std::max(now_seconds() - t0, 1e-9);
  outcome.iter_per_s = cfg.train_steps > 0 ? cfg.train_steps / elapsed : 0.0;

  save_checkpoint(cfg.checkpoint_path, trainer.model());

  Report& report = outcome.report;
  put_environment(report, cfg, "train");
  report.put("train.steps", cfg.train_steps);
  report.put("train.batch_size", cfg.batch_size);
  report.put("train.scenes", std::int64_t(scenes.size()));
  report.put("train.augmented", cfg.augment.enabled ? "true" : "false");
  report.put("train.elapsed_s", elapsed);
  report.put("train.iter_per_s", outcome.iter_per_s);
  report.put("train.params", trainer.model().param_count());
  if (!outcome.loss_trace.empty()) {
    report.put("train.loss_initial", outcome.loss_trace.front());
    report.put("train.loss_final", outcome.loss_trace.back());
  }
  report.put("train.checkpoint", cfg.checkpoint_path);
  auto& table = report.add_table("loss", {"step", "loss"});
  for (std::size_t i = 0; i < outcome.loss_trace.size(); ++i)
    table.rows.push_back({std::to_string(i), format_double(outcome.loss_trace[i])});

  emit_report(report, report_format_from_name(cfg.format), cfg.out_path);
  return outcome;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOutcome {
  Report report;
  bool metrics_defined = false;
  double miou_mean = 0.0;
  double macc_mean = 0.0;
  double elapsed_s = 0.0;
  int variants = 1;
};

inline EvalOutcome cmd_eval(const RunConfig& cfg) {
  cfg.validate();
  Segmentor<float> model = load_checkpoint(cfg.checkpoint_path);
  ensure_compatible(model.config(), cfg.segmentor);

  const std::vector<PointCloud> scenes = load_heldout_scenes(cfg);
  if (scenes.empty()) throw InvalidInput("no evaluation scenes");

  EvalOutcome outcome;
  outcome.variants = cfg.tta.any_enabled() ? cfg.tta.variant_count() : 1;

  ConfusionMatrix cm(model.config().num_classes);
  const double t0 = now_seconds();
  for (const auto& scene : scenes) {
    if (!scene.has_labels()) throw MissingLabels("evaluation scene has no labels");
    std::vector<std::uint32_t> pred;
    if (cfg.tta.any_enabled()) {
      pred = tta_predict(
          scene,
          [&](const PointCloud& c) { return Matrix<double>(model.forward(c).cast<double>()); },
          cfg.tta);
    } else {
      pred = model.predict(scene);
    }
    accumulate(cm, pred, *scene.labels);
  }
  outcome.elapsed_s = std::max(now_seconds() - t0, 1e-9);

  Report& report = outcome.report;
  put_environment(report, cfg, "eval");
  report.put("eval.scenes", std::int64_t(scenes.size()));
  report.put("eval.scored_points", cm.total());
  report.put("eval.tta_variants", outcome.variants);
  report.put("eval.elapsed_s", outcome.elapsed_s);
  report.put("eval.scans_per_s", double(scenes.size()) / outcome.elapsed_s);

  auto& table = report.add_table("per_class", {"class", "iou", "acc"});
  try {
    const ClassScores iou = miou(cm);
    const ClassScores acc = macc(cm);
    outcome.metrics_defined = true;
    outcome.miou_mean = iou.mean;
    outcome.macc_mean = acc.mean;
    report.put("eval.miou", iou.mean);
    report.put("eval.macc", acc.mean);
    for (int c = 0; c < cm.num_classes; ++c)
      table.rows.push_back(
          {std::to_string(c),
           iou.is_defined(c) ? format_double(iou.per_class[std::size_t(c)]) : "undefined",
           acc.is_defined(c) ? format_double(acc.per_class[std::size_t(c)]) : "undefined"});
  } catch (const UndefinedMetric&) {
    report.put("eval.miou", "undefined");
    report.put("eval.macc", "undefined");
    report.put("eval.warning", "no scored points; metrics undefined");
  }

  emit_report(report, report_format_from_name(cfg.format), cfg.out_path);
  return outcome;
}

// ---------------------------------------------------------------------------
// augment-preview

// Writes each configured operator's mixed pair as scan + label files under
// the output directory, plus a preview report.
inline Report cmd_augment_preview(const RunConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.out_path);
  fs::create_directories(out_dir);

  std::vector<PointCloud> scenes;
  if (cfg.dataset.type == DatasetConfig::Type::Synthetic) {
    SynthSceneConfig sa = cfg.dataset.scene;
    SynthSceneConfig sb = cfg.dataset.scene;
    sb.seed = sa.seed + 1;
    scenes.push_back(synth_scene(sa));
    scenes.push_back(synth_scene(sb));
  } else {
    scenes = load_kitti_scenes(cfg.dataset.dir, cfg.dataset.remap_path, 2);
  }
  if (scenes.size() < 2) throw InvalidInput("augment preview needs two scenes");

  Report report;
  put_environment(report, cfg, "augment-preview");
  auto& table = report.add_table("mixes", {"operator", "points_a", "points_b", "regions"});

  std::mt19937_64 rng(cfg.seed);
  auto write_pair = [&](const std::string& op, const MixResult& mix) {
    for (const auto& [suffix, cloud] :
         {std::pair<const char*, const PointCloud*>{"a", &mix.mixed_a}, {"b", &mix.mixed_b}}) {
      save_bytes((out_dir / (op + "_" + suffix + ".bin")).string(), write_scan(*cloud));
      std::vector<std::uint32_t> instance(cloud->size(), 0);
      save_bytes((out_dir / (op + "_" + suffix + ".label")).string(),
                 write_labels(*cloud->labels, instance));
    }
    table.rows.push_back({op, std::to_string(mix.mixed_a.size()),
                          std::to_string(mix.mixed_b.size()),
                          std::to_string(mix.partition.regions)});
  };

  for (const auto& op : cfg.augment.operators) {
    std::uniform_int_distribution<int> axis_pick(0, 1);
    const AngularAxis axis = axis_pick(rng) == 0 ? AngularAxis::Inclination : AngularAxis::Azimuth;
    if (op == "lasermix") {
      std::uniform_int_distribution<int> bands(cfg.augment.lasermix_bands[0],
                                               cfg.augment.lasermix_bands[1]);
      write_pair(op, lasermix(scenes[0], scenes[1], axis, bands(rng), rng()));
    } else if (op == "polarmix") {
      std::uniform_real_distribution<double> start(-kPi, kPi);
      std::uniform_real_distribution<double> width(cfg.augment.polarmix_width[0],
                                                   cfg.augment.polarmix_width[1]);
      const double s = start(rng);
      write_pair(op, polarmix_scene(scenes[0], scenes[1], s, width(rng), rng()));
    } else if (op == "frustummix") {
      write_pair(op, frustummix(scenes[0], scenes[1], axis, cfg.augment.frustummix_regions, rng()));
    }
  }

  emit_report(report, report_format_from_name(cfg.format), (out_dir / "preview.txt").string());
  return report;
}

// Majority-class baseline: predict the most frequent scored class everywhere.
inline double majority_baseline_miou(const std::vector<const std::vector<std::uint32_t>*>& gts,
                                     int num_classes) {
  std::vector<std::int64_t> hist(std::size_t(num_classes), 0);
  for (const auto* gt : gts)
    for (std::uint32_t y : *gt)
      if (y != kIgnoreLabel) ++hist[y];
  const std::uint32_t majority = std::uint32_t(
      std::max_element(hist.begin(), hist.end()) - hist.begin());
  ConfusionMatrix cm(num_classes);
  for (const auto* gt : gts) {
    const std::vector<std::uint32_t> pred(gt->size(), majority);
    accumulate(cm, pred, *gt);
  }
  return miou(cm).mean;
}

}  // namespace voxflow
