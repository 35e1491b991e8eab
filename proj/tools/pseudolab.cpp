// pseudolab: generate data, train pseudo-labeling runs, compare modes and
// render decision boundaries.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pseudolab/app/commands.hpp"
#include "pseudolab/app/run_config.hpp"
#include "pseudolab/errors.hpp"

namespace app = pseudolab::app;

namespace {

std::string kebab(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Soft pseudo-labeling for semi-supervised classification"};
  cli.require_subcommand(1);

  // gen
  auto* gen = cli.add_subcommand("gen", "Generate a synthetic dataset CSV");
  std::string gen_kind = "two-moons";
  app::GenOptions gen_opts;
  std::size_t gen_lpc = 0;
  std::string gen_out = "-";
  std::string gen_truth;
  gen->add_option("--kind", gen_kind, "two-moons or blobs")->capture_default_str();
  gen->add_option("--n", gen_opts.spec.n_samples, "Number of samples")->capture_default_str();
  gen->add_option("--noise", gen_opts.spec.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  gen->add_option("--classes", gen_opts.spec.n_classes, "Classes (blobs)")->capture_default_str();
  gen->add_option("--features", gen_opts.spec.n_features, "Features (blobs)")->capture_default_str();
  gen->add_option("--center-box", gen_opts.spec.center_box, "Blob centres lie in [-box, box]^d")
      ->capture_default_str();
  auto* lpc_opt = gen->add_option("--labels-per-class", gen_lpc, "Keep this many labels per class");
  gen->add_option("--seed", gen_opts.spec.seed, "Random seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV, - for stdout")->capture_default_str();
  gen->add_option("--truth-out", gen_truth, "Also write the fully labeled CSV here");

  // train
  auto* train = cli.add_subcommand("train", "Warm up and train one model per seed");
  std::string config_path;
  train->add_option("--config", config_path, "key = value config file");
  std::map<std::string, std::string> overrides;
  for (const std::string& key : app::setting_keys()) {
    train->add_option("--" + kebab(key), overrides[key], "Overrides '" + key + "'");
  }

  // compare
  auto* compare = cli.add_subcommand("compare", "Summarize finished runs per mode");
  std::vector<std::string> run_dirs;
  std::string compare_out = "comparison.csv";
  compare->add_option("runs", run_dirs, "Run output directories")->required();
  compare->add_option("--out", compare_out, "Summary table CSV")->capture_default_str();

  // boundary
  auto* boundary = cli.add_subcommand("boundary", "Render a 2-D model's decision regions");
  app::BoundaryOptions bopts;
  std::string bounds, grid_size, checkpoint, data, out_dir = ".";
  boundary->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  boundary->add_option("--data", data, "Dataset CSV whose labeled points are marked");
  boundary->add_option("--grid-bounds", bounds, "x0_min,x0_max,x1_min,x1_max");
  boundary->add_option("--grid-size", grid_size, "width,height or one size");
  boundary->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? app::kExitOk : app::kExitConfig;
  }

  try {
    if (gen->parsed()) {
      auto kind = app::parse_kind(gen_kind);
      if (!kind) throw pseudolab::ConfigError("unknown dataset kind '" + gen_kind + "'");
      gen_opts.spec.kind = *kind;
      if (gen_opts.spec.kind == pseudolab::SyntheticKind::two_moons) gen_opts.spec.n_classes = 2;
      if (lpc_opt->count() > 0) gen_opts.labels_per_class = gen_lpc;
      gen_opts.truth_out = gen_truth;
      if (gen_out == "-") {
        app::cmd_gen(gen_opts, std::cout);
      } else {
        std::ofstream out(gen_out, std::ios::binary);
        if (!out) throw pseudolab::ConfigError("cannot write " + gen_out);
        app::cmd_gen(gen_opts, out);
      }
    } else if (train->parsed()) {
      app::RunConfig cfg;
      if (!config_path.empty()) app::read_run_config(config_path, cfg);
      app::apply_environment(cfg);
      for (const std::string& key : app::setting_keys()) {
        if (train->get_option("--" + kebab(key))->count() > 0) app::apply_setting(cfg, key, overrides[key]);
      }
      app::cmd_train(cfg, std::cout);
    } else if (compare->parsed()) {
      std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
      app::cmd_compare(dirs, compare_out, std::cout);
    } else if (boundary->parsed()) {
      app::RunConfig grid_cfg;
      if (!bounds.empty()) app::apply_setting(grid_cfg, "grid_bounds", bounds);
      if (!grid_size.empty()) app::apply_setting(grid_cfg, "grid_size", grid_size);
      bopts.grid = grid_cfg.grid;
      bopts.checkpoint = checkpoint;
      bopts.data = data;
      bopts.out_dir = out_dir;
      app::cmd_boundary(bopts, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::exit_code_for(e);
  }
  return app::kExitOk;
}
