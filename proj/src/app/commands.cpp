#include "pseudolab/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "pseudolab/app/render.hpp"
#include "pseudolab/datagen.hpp"
#include "pseudolab/diagnostics.hpp"
#include "pseudolab/errors.hpp"
#include "pseudolab/network.hpp"
#include "pseudolab/numfmt.hpp"

namespace pseudolab::app {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kStreamValidation = 201;

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::optional<double> unlabeled_accuracy(const Mlp& model, const SslDataset& ds) {
  const Tensor probs = model.predict(ds.features);
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labeled[i] || ds.true_labels[i] == kNoLabel) continue;
    ++total;
    correct += static_cast<int>(argmax(probs.row(i))) == ds.true_labels[i];
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total);
}

bool all_truth_known(const SslDataset& ds) {
  return std::none_of(ds.true_labels.begin(), ds.true_labels.end(), [](int y) { return y == kNoLabel; });
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const GenerationError*>(&e)) return kExitConfig;
  return kExitContract;
}

SslDataset cmd_gen(const GenOptions& options, std::ostream& out) {
  SslDataset full = generate(options.spec);
  if (!options.truth_out.empty()) {
    auto truth = open_out(options.truth_out);
    save_csv(full, truth);
  }
  SslDataset ds = options.labels_per_class ? mask_labels(full, *options.labels_per_class, options.spec.seed)
                                           : std::move(full);
  save_csv(ds, out);
  return ds;
}

SslDataset make_dataset(const RunConfig& cfg, std::uint64_t seed) {
  const std::uint64_t data_seed = cfg.data_seed.value_or(seed);
  if (!cfg.from_csv()) {
    SyntheticSpec spec = cfg.data;
    spec.seed = data_seed;
    return mask_labels(generate(spec), cfg.labels_per_class, data_seed);
  }
  std::optional<SslDataset> truth;
  if (!cfg.truth_path.empty()) truth = load_csv(cfg.truth_path);
  SslDataset ds = load_csv(cfg.data_path, truth ? std::optional(truth->num_classes) : std::nullopt);
  if (truth) attach_truth(ds, *truth);
  if (ds.num_unlabeled() == 0 && cfg.labels_per_class > 0) {
    ds = mask_labels(ds, cfg.labels_per_class, data_seed);
  }
  return ds;
}

DataSplit split_validation(SslDataset ds, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must lie in [0, 1)");
  if (fraction == 0.0) return {std::move(ds), std::nullopt};
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!ds.labeled[i] && ds.true_labels[i] != kNoLabel) pool.push_back(i);
  Rng rng = Rng::derive(seed, kStreamValidation);
  rng.shuffle(pool);
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
  if (n_val == 0) throw ConfigError("validation fraction selects no samples");
  if (n_val == ds.size()) throw ConfigError("validation fraction leaves no training samples");
  std::vector<bool> held(ds.size(), false);
  for (std::size_t j = 0; j < n_val; ++j) held[pool[j]] = true;

  std::vector<std::size_t> keep, val;
  for (std::size_t i = 0; i < ds.size(); ++i) (held[i] ? val : keep).push_back(i);
  EvalSet eval{gather_rows(ds.features, val), {}};
  for (std::size_t i : val) eval.labels.push_back(ds.true_labels[i]);

  SslDataset train;
  train.features = gather_rows(ds.features, keep);
  train.pseudo_labels = gather_rows(ds.pseudo_labels, keep);
  train.num_classes = ds.num_classes;
  for (std::size_t i : keep) {
    train.true_labels.push_back(ds.true_labels[i]);
    train.labeled.push_back(ds.labeled[i]);
  }
  return {std::move(train), std::move(eval)};
}

fs::path seed_dir(const RunConfig& cfg, std::uint64_t seed) {
  return cfg.output_dir / ("seed_" + std::to_string(seed));
}

SeedResult train_seed(const RunConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  DataSplit split = split_validation(make_dataset(cfg, seed), cfg.validation_fraction, seed);
  SslDataset& ds = split.train;

  TrainConfig tc = cfg.train;
  tc.seed = seed;
  MlpSpec spec;
  spec.layer_sizes.push_back(ds.dim());
  spec.layer_sizes.insert(spec.layer_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  spec.layer_sizes.push_back(ds.num_classes);
  spec.dropout_rate = tc.dropout_rate;
  Mlp model = build_mlp(spec, seed);

  const fs::path dir = seed_dir(cfg, seed);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "train_data.csv");
    save_csv(ds, out);
  }
  if (all_truth_known(ds)) {
    auto out = open_out(dir / "truth.csv");
    save_csv(SslDataset::fully_labeled(ds.features, ds.true_labels, ds.num_classes), out);
  }

  auto snapshot = [&](const EpochMetrics& m, const Mlp&, const SslDataset& current) {
    if (m.epoch == 0 || (cfg.snapshot_every > 0 && m.epoch % cfg.snapshot_every == 0)) {
      write_pseudo_label_snapshot(current, dir / ("pseudo_labels_e" + std::to_string(m.epoch) + ".csv"));
    }
  };
  const std::vector<EpochMetrics> history =
      run_training(model, ds, tc, split.validation ? &*split.validation : nullptr, snapshot);

  write_metrics_csv(history, dir / "metrics.csv");
  write_extra_metrics_csv(history, dir / "metrics_extra.csv");
  write_pseudo_label_snapshot(ds, dir / "pseudo_labels_final.csv");
  save_checkpoint(model, dir / "model.ckpt");

  const EpochMetrics& last = history.back();
  SeedResult r;
  r.seed = seed;
  r.mode = tc.mode;
  r.epochs = last.epoch;
  r.train_error = last.train_error;
  r.val_error = last.val_error;
  r.unlabeled_accuracy = unlabeled_accuracy(model, ds);
  r.pseudo_acc = last.pseudo_acc;
  r.r_t = last.r_t;
  r.r_t_unlabeled = last.r_t_unlabeled;
  return r;
}

std::vector<SeedResult> cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  {
    auto out = open_out(cfg.output_dir / "config.txt");
    out << to_text(cfg);
  }
  std::vector<SeedResult> results;
  for (std::uint64_t seed : cfg.seeds) {
    SeedResult r = train_seed(cfg, seed);
    log << "seed " << seed << " mode " << to_string(r.mode) << ": epochs=" << r.epochs
        << " unlabeled_acc=" << (r.unlabeled_accuracy ? fixed(*r.unlabeled_accuracy) : "n/a")
        << " train_error=" << fixed(r.train_error) << " val_error=" << fixed(r.val_error)
        << " r_t=" << (r.r_t ? fixed(*r.r_t) : "n/a") << '\n';
    results.push_back(r);
  }
  auto out = open_out(cfg.output_dir / "summary.csv");
  write_summary_csv(results, out);
  return results;
}

namespace {

constexpr const char* kSummaryHeader =
    "seed,mode,epochs,train_error,val_error,unlabeled_acc,pseudo_acc,r_t,r_t_unlabeled";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_summary_csv(const std::vector<SeedResult>& results, std::ostream& out) {
  out << kSummaryHeader << '\n';
  for (const SeedResult& r : results) {
    out << r.seed << ',' << to_string(r.mode) << ',' << r.epochs << ',' << format_double(r.train_error) << ','
        << format_double(r.val_error) << ',' << opt_field(r.unlabeled_accuracy) << ','
        << opt_field(r.pseudo_acc) << ',' << opt_field(r.r_t) << ',' << opt_field(r.r_t_unlabeled) << '\n';
  }
}

std::vector<SeedResult> read_summary_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader) throw ParseError(1, "unexpected summary header");
  std::vector<SeedResult> out;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 9) throw ParseError(number, "expected 9 fields");
    auto num = [&](const std::string& s) {
      auto v = parse_double(s);
      if (!v) throw ParseError(number, "bad number '" + s + "'");
      return *v;
    };
    auto opt = [&](const std::string& s) { return s.empty() ? std::nullopt : std::optional(num(s)); };
    auto count = [&](const std::string& s) {
      auto v = parse_int(s);
      if (!v || *v < 0) throw ParseError(number, "bad count '" + s + "'");
      return static_cast<std::uint64_t>(*v);
    };
    SeedResult r;
    r.seed = count(f[0]);
    auto mode = parse_mode(f[1]);
    if (!mode) throw ParseError(number, "unknown mode '" + f[1] + "'");
    r.mode = *mode;
    r.epochs = count(f[2]);
    r.train_error = num(f[3]);
    r.val_error = num(f[4]);
    r.unlabeled_accuracy = opt(f[5]);
    r.pseudo_acc = opt(f[6]);
    r.r_t = opt(f[7]);
    r.r_t_unlabeled = opt(f[8]);
    out.push_back(r);
  }
  return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

Comparison compare_runs(const std::vector<fs::path>& run_dirs) {
  std::map<SslMode, std::map<std::uint64_t, SeedResult>> by_mode;
  for (const fs::path& dir : run_dirs) {
    if (!fs::is_directory(dir)) throw ConfigError("run directory not found: " + dir.string());
    const fs::path summary = dir / "summary.csv";
    if (!fs::exists(summary)) throw ConfigError("no summary.csv in " + dir.string());
    for (const SeedResult& r : read_summary_csv(summary)) {
      if (!by_mode[r.mode].emplace(r.seed, r).second) {
        throw ConfigError("mode " + std::string(to_string(r.mode)) + " seed " + std::to_string(r.seed) +
                          " appears in more than one run");
      }
    }
  }

  Comparison cmp;
  for (const auto& [mode, seeds] : by_mode) {
    ModeSummary s;
    s.mode = mode;
    s.seeds = seeds.size();
    std::vector<double> errors, rts;
    for (const auto& [seed, r] : seeds) {
      errors.push_back(r.final_error());
      if (r.r_t) rts.push_back(*r.r_t);
    }
    std::tie(s.error_mean, s.error_std) = mean_std(errors);
    if (!rts.empty()) {
      auto [m, sd] = mean_std(rts);
      s.r_t_mean = m;
      s.r_t_std = sd;
    }
    cmp.modes.push_back(s);
  }

  // Checks run over the seeds every involved mode has in common.
  auto shared_seeds = [&](std::initializer_list<SslMode> modes) {
    std::vector<std::uint64_t> seeds;
    for (SslMode m : modes)
      if (!by_mode.count(m)) return seeds;
    for (const auto& [seed, r] : by_mode.at(*modes.begin())) {
      bool everywhere = true;
      for (SslMode m : modes) everywhere = everywhere && by_mode.at(m).count(seed);
      if (everywhere) seeds.push_back(seed);
    }
    return seeds;
  };

  {
    OrderingCheck check{"error M* <= M <= C", 0, 0};
    for (std::uint64_t seed : shared_seeds({SslMode::MStar, SslMode::M, SslMode::C})) {
      const double ms = by_mode[SslMode::MStar][seed].final_error();
      const double m = by_mode[SslMode::M][seed].final_error();
      const double c = by_mode[SslMode::C][seed].final_error();
      ++check.total;
      check.holds += ms <= m && m <= c;
    }
    cmp.checks.push_back(check);
  }
  {
    // No incorrect predictions means no confident errors: absent r_t counts as 0.
    OrderingCheck check{"r_t M* <= C", 0, 0};
    for (std::uint64_t seed : shared_seeds({SslMode::MStar, SslMode::C})) {
      const double ms = by_mode[SslMode::MStar][seed].r_t.value_or(0.0);
      const double c = by_mode[SslMode::C][seed].r_t.value_or(0.0);
      ++check.total;
      check.holds += ms <= c;
    }
    cmp.checks.push_back(check);
  }
  return cmp;
}

void write_comparison_csv(const Comparison& cmp, std::ostream& out) {
  out << "mode,seeds,error_mean,error_std,r_t_mean,r_t_std\n";
  for (const ModeSummary& s : cmp.modes) {
    out << to_string(s.mode) << ',' << s.seeds << ',' << format_double(s.error_mean) << ','
        << format_double(s.error_std) << ',' << opt_field(s.r_t_mean) << ',' << opt_field(s.r_t_std) << '\n';
  }
}

Comparison cmd_compare(const std::vector<fs::path>& run_dirs, const fs::path& out_csv, std::ostream& log) {
  Comparison cmp = compare_runs(run_dirs);
  log << std::left << std::setw(5) << "mode" << std::setw(7) << "seeds" << std::setw(20) << "error"
      << "r_t\n";
  for (const ModeSummary& s : cmp.modes) {
    log << std::setw(5) << to_string(s.mode) << std::setw(7) << s.seeds << std::setw(20)
        << (fixed(s.error_mean) + " +- " + fixed(s.error_std))
        << (s.r_t_mean ? fixed(*s.r_t_mean) + " +- " + fixed(*s.r_t_std) : std::string("n/a")) << '\n';
  }
  for (const OrderingCheck& c : cmp.checks) {
    log << "check " << c.name << ": ";
    if (c.total == 0) log << "n/a\n";
    else log << c.holds << '/' << c.total << " seeds\n";
  }
  if (!out_csv.empty()) {
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    auto out = open_out(out_csv);
    write_comparison_csv(cmp, out);
  }
  return cmp;
}

BoundaryResult cmd_boundary(const BoundaryOptions& options, std::ostream& log) {
  options.grid.validate();
  const Mlp model = load_checkpoint(options.checkpoint);
  const Tensor probs = evaluate_grid(model, options.grid);

  std::optional<Tensor> marks;
  if (!options.data.empty()) {
    const SslDataset ds = load_csv(options.data);
    if (ds.dim() != 2) throw ConfigError("marked data must have 2 features");
    const auto labeled = ds.labeled_indices();
    if (!labeled.empty()) marks = gather_rows(ds.features, labeled);
  }

  fs::create_directories(options.out_dir);
  BoundaryResult r;
  r.grid_csv = options.out_dir / "grid.csv";
  r.ppm = options.out_dir / "boundary.ppm";
  {
    auto out = open_out(r.grid_csv);
    write_grid_csv(grid_points(options.grid), probs, out);
  }
  {
    auto out = open_out(r.ppm);
    out << render_ppm(options.grid, probs, marks ? &*marks : nullptr);
  }
  r.max_crossings = max_line_crossings(class_grid(options.grid, probs));
  log << "wrote " << r.ppm.string() << " and " << r.grid_csv.string() << " (" << options.grid.width << 'x'
      << options.grid.height << "), max boundary crossings along a straight line: " << r.max_crossings << '\n';
  return r;
}

}  // namespace pseudolab::app
