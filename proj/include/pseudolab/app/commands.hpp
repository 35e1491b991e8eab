#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pseudolab/app/run_config.hpp"
#include "pseudolab/dataset.hpp"
#include "pseudolab/trainer.hpp"

namespace pseudolab::app {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;    // bad configuration or input file
inline constexpr int kExitContract = 3;  // runtime contract violation

/// Maps a caught exception to kExitConfig or kExitContract.
int exit_code_for(const std::exception& e);

// gen

struct GenOptions {
  SyntheticSpec spec;
  /// Keep this many labels per class; nullopt writes a fully labeled file.
  std::optional<std::size_t> labels_per_class;
  /// Also write the fully labeled data here (optional).
  std::filesystem::path truth_out;
};

/// Generates the dataset and writes its CSV to `out`.
SslDataset cmd_gen(const GenOptions& options, std::ostream& out);

// train

/// The masked training set of one run seed, before any validation split.
SslDataset make_dataset(const RunConfig& cfg, std::uint64_t seed);

struct DataSplit {
  SslDataset train;
  std::optional<EvalSet> validation;
};

/// Moves round(fraction * n) unlabeled samples with known truth into a
/// held-out set, chosen with `seed`. fraction 0 returns the data unchanged.
DataSplit split_validation(SslDataset ds, double fraction, std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  SslMode mode = SslMode::MStar;
  std::size_t epochs = 0;
  double train_error = 0.0;
  double val_error = 0.0;
  /// Final model accuracy on the unlabeled samples with known truth.
  std::optional<double> unlabeled_accuracy;
  std::optional<double> pseudo_acc;
  std::optional<double> r_t;
  std::optional<double> r_t_unlabeled;

  /// 1 - unlabeled_accuracy, or val_error when no unlabeled truth is known.
  double final_error() const { return unlabeled_accuracy ? 1.0 - *unlabeled_accuracy : val_error; }
};

std::filesystem::path seed_dir(const RunConfig& cfg, std::uint64_t seed);

/// Warm-up and training for one seed. Writes metrics.csv, metrics_extra.csv,
/// model.ckpt, train_data.csv (plus truth.csv when every truth is known) and
/// pseudo-label snapshots into seed_dir(cfg, seed).
SeedResult train_seed(const RunConfig& cfg, std::uint64_t seed);

/// Runs every seed, prints one summary line per seed to `log`, and writes
/// config.txt and summary.csv into cfg.output_dir.
std::vector<SeedResult> cmd_train(const RunConfig& cfg, std::ostream& log);

void write_summary_csv(const std::vector<SeedResult>& results, std::ostream& out);
std::vector<SeedResult> read_summary_csv(const std::filesystem::path& path);

// compare

struct ModeSummary {
  SslMode mode = SslMode::C;
  std::size_t seeds = 0;
  double error_mean = 0.0;
  double error_std = 0.0;
  std::optional<double> r_t_mean;  // over seeds where r_t is present
  std::optional<double> r_t_std;
};

struct OrderingCheck {
  std::string name;
  std::size_t holds = 0;
  std::size_t total = 0;  // seeds shared by all modes involved; 0 = not applicable
};

struct Comparison {
  std::vector<ModeSummary> modes;  // in C, C*, M, M* order, present modes only
  std::vector<OrderingCheck> checks;
};

/// Aggregates the summary.csv files of finished runs. Throws ConfigError for
/// a missing run directory or a duplicated (mode, seed) pair.
Comparison compare_runs(const std::vector<std::filesystem::path>& run_dirs);

/// mode,seeds,error_mean,error_std,r_t_mean,r_t_std
void write_comparison_csv(const Comparison& cmp, std::ostream& out);

/// compare_runs, a readable table on `log` and the CSV at `out_csv`.
Comparison cmd_compare(const std::vector<std::filesystem::path>& run_dirs,
                       const std::filesystem::path& out_csv, std::ostream& log);

// boundary

struct BoundaryOptions {
  std::filesystem::path checkpoint;
  GridSpec grid;
  /// Dataset CSV whose labeled rows are marked on the image (optional).
  std::filesystem::path data;
  std::filesystem::path out_dir = ".";
};

struct BoundaryResult {
  std::filesystem::path ppm;
  std::filesystem::path grid_csv;
  std::size_t max_crossings = 0;
};

/// Writes boundary.ppm and grid.csv into out_dir.
BoundaryResult cmd_boundary(const BoundaryOptions& options, std::ostream& log);

}  // namespace pseudolab::app
