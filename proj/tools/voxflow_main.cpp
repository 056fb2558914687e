#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "voxflow/commands.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::int64_t seed = -1;
  int threads = 0;
  std::string out;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "run configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", args.seed, "override the configured seed");
  sub->add_option("--threads", args.threads, "override the configured thread count");
  sub->add_option("--out", args.out, "override the configured output path");
}

voxflow::RunConfig load_with_overrides(const CommonArgs& args) {
  voxflow::RunConfig cfg = voxflow::load_run_config(args.config_path);
  if (args.seed >= 0) cfg.seed = std::uint64_t(args.seed);
  if (args.threads > 0) cfg.threads = args.threads;
  if (!args.out.empty()) cfg.out_path = args.out;
  cfg.validate();
#ifdef _OPENMP
  omp_set_num_threads(cfg.threads);
#endif
  Eigen::setNbThreads(cfg.threads);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse voxel convolution dataflow benchmark and point-cloud segmentation toolkit"};
  app.require_subcommand(1);

  CommonArgs bench_args, train_args, eval_args, preview_args;
  bool tta_flip = false, tta_rotate = false, tta_scale = false, tta_translate = false;

  CLI::App* bench = app.add_subcommand("bench-dataflows",
                                       "time the convolution dataflows on one workload");
  add_common(bench, bench_args);

  CLI::App* train = app.add_subcommand("train", "train the tiny segmentor and write a checkpoint");
  add_common(train, train_args);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint at the point level");
  add_common(eval, eval_args);
  eval->add_flag("--tta-flip", tta_flip, "enable flip variants");
  eval->add_flag("--tta-rotate", tta_rotate, "enable rotation variants");
  eval->add_flag("--tta-scale", tta_scale, "enable scale variants");
  eval->add_flag("--tta-translate", tta_translate, "enable translation variants");

  CLI::App* preview = app.add_subcommand("augment-preview",
                                         "write mixed scans for inspection");
  add_common(preview, preview_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed()) {
      const auto outcome = voxflow::cmd_bench_dataflows(load_with_overrides(bench_args));
      std::cout << voxflow::render_report(outcome.report, voxflow::ReportFormat::Text);
    } else if (train->parsed()) {
      const auto outcome = voxflow::cmd_train(load_with_overrides(train_args));
      std::cout << voxflow::render_report(outcome.report, voxflow::ReportFormat::Text);
    } else if (eval->parsed()) {
      voxflow::RunConfig cfg = load_with_overrides(eval_args);
      cfg.tta.flip |= tta_flip;
      cfg.tta.rotate |= tta_rotate;
      cfg.tta.scale |= tta_scale;
      cfg.tta.translate |= tta_translate;
      const auto outcome = voxflow::cmd_eval(cfg);
      if (!outcome.metrics_defined)
        std::cerr << "warning: no scored points; metrics undefined\n";
      std::cout << voxflow::render_report(outcome.report, voxflow::ReportFormat::Text);
    } else if (preview->parsed()) {
      const auto report = voxflow::cmd_augment_preview(load_with_overrides(preview_args));
      std::cout << voxflow::render_report(report, voxflow::ReportFormat::Text);
    }
  } catch (const voxflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
