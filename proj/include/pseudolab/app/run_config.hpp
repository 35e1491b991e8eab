#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pseudolab/datagen.hpp"
#include "pseudolab/train_config.hpp"

namespace pseudolab::app {

/// Region and resolution of a decision-boundary render. Pixel (r, c) is the
/// centre of its cell; row 0 is the top (largest x1).
struct GridSpec {
  double x0_min = -1.5;
  double x0_max = 2.5;
  double x1_min = -1.0;
  double x1_max = 1.5;
  std::size_t width = 200;
  std::size_t height = 200;

  void validate() const;
};

/// Everything a `train` run needs. The defaults reproduce the two-moons
/// experiment: 1000 points, 4 labels per class, a [2, 50, 2] MLP, mode M*.
struct RunConfig {
  // Data: a generator spec, or a CSV file when data_path is set.
  SyntheticSpec data;
  std::size_t labels_per_class = 4;
  /// Fixed data/mask seed; by default each run seed also seeds the data.
  std::optional<std::uint64_t> data_seed;
  std::filesystem::path data_path;
  /// Fully labeled copy of data_path, used to score unlabeled rows.
  std::filesystem::path truth_path;

  TrainConfig train;
  std::vector<std::size_t> hidden{50};
  std::vector<std::uint64_t> seeds{1};
  /// Fraction of the unlabeled samples held out for validation.
  double validation_fraction = 0.0;
  std::filesystem::path output_dir = "runs";
  /// Pseudo-label snapshot every n epochs; 0 keeps only warm-up and final.
  std::size_t snapshot_every = 0;
  GridSpec grid;

  bool from_csv() const { return !data_path.empty(); }
  /// Throws ConfigError on any out-of-range value.
  void validate() const;
};

/// Sets one field from its textual value. Keys use snake_case; dashes are
/// accepted in place of underscores. Throws ConfigError on an unknown key or
/// a malformed value.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Reads `key = value` lines on top of `cfg`. `#` starts a comment; blank
/// lines are skipped; lists are comma separated. Throws ParseError.
void read_run_config(std::istream& in, RunConfig& cfg);
void read_run_config(const std::filesystem::path& path, RunConfig& cfg);

/// Canonical text form, readable by read_run_config.
std::string to_text(const RunConfig& cfg);

/// Every key apply_setting understands, in to_text order.
const std::vector<std::string>& setting_keys();

/// Applies PSEUDOLAB_SEED (a single seed or a comma list) when it is set.
void apply_environment(RunConfig& cfg);

std::string_view to_string(SyntheticKind kind);
std::optional<SyntheticKind> parse_kind(std::string_view text);

}  // namespace pseudolab::app
