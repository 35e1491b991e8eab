#include "pseudolab/app/run_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "pseudolab/errors.hpp"
#include "pseudolab/numfmt.hpp"

namespace pseudolab::app {

void GridSpec::validate() const {
  if (!(x0_min < x0_max) || !(x1_min < x1_max)) throw ConfigError("grid bounds must satisfy min < max");
  if (width == 0 || height == 0) throw ConfigError("grid resolution must be positive");
}

void RunConfig::validate() const {
  train.validate();
  grid.validate();
  if (!from_csv()) {
    if (data.n_samples < 2) throw ConfigError("n_samples must be at least 2");
    if (!(data.noise_sigma >= 0.0)) throw ConfigError("noise must be non-negative");
    if (data.kind == SyntheticKind::blobs) {
      if (data.n_classes < 2) throw ConfigError("blobs need at least 2 classes");
      if (data.n_features == 0) throw ConfigError("n_features must be positive");
      if (!(data.center_box > 0.0)) throw ConfigError("center_box must be positive");
    }
  }
  if (hidden.empty()) throw ConfigError("hidden needs at least one layer size");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("hidden layer sizes must be positive");
  if (seeds.empty()) throw ConfigError("seeds must list at least one seed");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in [0, 1)");
  }
}

std::string_view to_string(SyntheticKind kind) {
  return kind == SyntheticKind::two_moons ? "two-moons" : "blobs";
}

std::optional<SyntheticKind> parse_kind(std::string_view text) {
  if (text == "two-moons" || text == "two_moons" || text == "moons") return SyntheticKind::two_moons;
  if (text == "blobs") return SyntheticKind::blobs;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": expected " +
                    expected);
}

double to_double(std::string_view key, std::string_view v) {
  auto d = parse_double(v);
  if (!d) bad_value(key, v, "a number");
  return *d;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  auto i = parse_int(v);
  if (!i || *i < 0) bad_value(key, v, "a non-negative integer");
  return static_cast<std::uint64_t>(*i);
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

template <typename T>
std::vector<T> to_uint_list(std::string_view key, std::string_view v) {
  std::vector<T> out;
  for (auto item : split_list(v)) out.push_back(static_cast<T>(to_uint(key, item)));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(items[i]);
  }
  return out;
}

struct Setting {
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

using Table = std::vector<std::pair<std::string, Setting>>;

const Table& table() {
  static const Table t = [] {
    Table t;
    auto add = [&t](std::string key, Setting s) { t.emplace_back(std::move(key), std::move(s)); };
    auto fmt = [](double d) { return format_double(d); };

    add("kind", {[](RunConfig& c, auto k, auto v) {
                   auto kind = parse_kind(v);
                   if (!kind) bad_value(k, v, "two-moons or blobs");
                   c.data.kind = *kind;
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.data.kind)); }});
    add("n_samples", {[](RunConfig& c, auto k, auto v) { c.data.n_samples = to_uint(k, v); },
                      [](const RunConfig& c) { return std::to_string(c.data.n_samples); }});
    add("noise", {[](RunConfig& c, auto k, auto v) { c.data.noise_sigma = to_double(k, v); },
                  [fmt](const RunConfig& c) { return fmt(c.data.noise_sigma); }});
    add("n_classes", {[](RunConfig& c, auto k, auto v) { c.data.n_classes = to_uint(k, v); },
                      [](const RunConfig& c) { return std::to_string(c.data.n_classes); }});
    add("n_features", {[](RunConfig& c, auto k, auto v) { c.data.n_features = to_uint(k, v); },
                       [](const RunConfig& c) { return std::to_string(c.data.n_features); }});
    add("center_box", {[](RunConfig& c, auto k, auto v) { c.data.center_box = to_double(k, v); },
                       [fmt](const RunConfig& c) { return fmt(c.data.center_box); }});
    add("labels_per_class", {[](RunConfig& c, auto k, auto v) { c.labels_per_class = to_uint(k, v); },
                             [](const RunConfig& c) { return std::to_string(c.labels_per_class); }});
    add("data_seed", {[](RunConfig& c, auto k, auto v) {
                        if (v.empty()) c.data_seed.reset();
                        else c.data_seed = to_uint(k, v);
                      },
                      [](const RunConfig& c) {
                        return c.data_seed ? std::to_string(*c.data_seed) : std::string();
                      }});
    add("data", {[](RunConfig& c, auto, auto v) { c.data_path = std::string(v); },
                 [](const RunConfig& c) { return c.data_path.string(); }});
    add("truth", {[](RunConfig& c, auto, auto v) { c.truth_path = std::string(v); },
                  [](const RunConfig& c) { return c.truth_path.string(); }});

    add("mode", {[](RunConfig& c, auto k, auto v) {
                   auto m = parse_mode(v);
                   if (!m) bad_value(k, v, "C, C*, M or M*");
                   c.train.mode = *m;
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.train.mode)); }});
    add("lambda_a", {[](RunConfig& c, auto k, auto v) { c.train.lambda_a = to_double(k, v); },
                     [fmt](const RunConfig& c) { return fmt(c.train.lambda_a); }});
    add("lambda_h", {[](RunConfig& c, auto k, auto v) { c.train.lambda_h = to_double(k, v); },
                     [fmt](const RunConfig& c) { return fmt(c.train.lambda_h); }});
    add("alpha", {[](RunConfig& c, auto k, auto v) { c.train.alpha = to_double(k, v); },
                  [fmt](const RunConfig& c) { return fmt(c.train.alpha); }});
    add("k", {[](RunConfig& c, auto k, auto v) { c.train.k = to_uint(k, v); },
              [](const RunConfig& c) { return std::to_string(c.train.k); }});
    add("batch_size", {[](RunConfig& c, auto k, auto v) { c.train.batch_size = to_uint(k, v); },
                       [](const RunConfig& c) { return std::to_string(c.train.batch_size); }});
    add("lr", {[](RunConfig& c, auto k, auto v) { c.train.lr = to_double(k, v); },
               [fmt](const RunConfig& c) { return fmt(c.train.lr); }});
    add("lr_milestones",
        {[](RunConfig& c, auto k, auto v) { c.train.lr_milestones = to_uint_list<std::size_t>(k, v); },
         [](const RunConfig& c) { return join(c.train.lr_milestones); }});
    add("lr_divisor", {[](RunConfig& c, auto k, auto v) { c.train.lr_divisor = to_double(k, v); },
                       [fmt](const RunConfig& c) { return fmt(c.train.lr_divisor); }});
    add("momentum", {[](RunConfig& c, auto k, auto v) { c.train.momentum = to_double(k, v); },
                     [fmt](const RunConfig& c) { return fmt(c.train.momentum); }});
    add("weight_decay", {[](RunConfig& c, auto k, auto v) { c.train.weight_decay = to_double(k, v); },
                         [fmt](const RunConfig& c) { return fmt(c.train.weight_decay); }});
    add("warmup_epochs", {[](RunConfig& c, auto k, auto v) { c.train.warmup_epochs = to_uint(k, v); },
                          [](const RunConfig& c) { return std::to_string(c.train.warmup_epochs); }});
    add("epochs", {[](RunConfig& c, auto k, auto v) { c.train.total_epochs = to_uint(k, v); },
                   [](const RunConfig& c) { return std::to_string(c.train.total_epochs); }});
    add("dropout", {[](RunConfig& c, auto k, auto v) { c.train.dropout_rate = to_double(k, v); },
                    [fmt](const RunConfig& c) { return fmt(c.train.dropout_rate); }});
    add("augment", {[](RunConfig& c, auto k, auto v) { c.train.augment.enabled = to_bool(k, v); },
                    [](const RunConfig& c) { return std::string(c.train.augment.enabled ? "true" : "false"); }});
    add("jitter", {[](RunConfig& c, auto k, auto v) { c.train.augment.jitter_sigma = to_double(k, v); },
                   [fmt](const RunConfig& c) { return fmt(c.train.augment.jitter_sigma); }});

    add("hidden", {[](RunConfig& c, auto k, auto v) { c.hidden = to_uint_list<std::size_t>(k, v); },
                   [](const RunConfig& c) { return join(c.hidden); }});
    add("seeds", {[](RunConfig& c, auto k, auto v) { c.seeds = to_uint_list<std::uint64_t>(k, v); },
                  [](const RunConfig& c) { return join(c.seeds); }});
    add("validation_fraction",
        {[](RunConfig& c, auto k, auto v) { c.validation_fraction = to_double(k, v); },
         [fmt](const RunConfig& c) { return fmt(c.validation_fraction); }});
    add("output_dir", {[](RunConfig& c, auto, auto v) { c.output_dir = std::string(v); },
                       [](const RunConfig& c) { return c.output_dir.string(); }});
    add("snapshot_every", {[](RunConfig& c, auto k, auto v) { c.snapshot_every = to_uint(k, v); },
                           [](const RunConfig& c) { return std::to_string(c.snapshot_every); }});
    add("grid_bounds", {[](RunConfig& c, auto k, auto v) {
                          auto items = split_list(v);
                          if (items.size() != 4) bad_value(k, v, "x0_min,x0_max,x1_min,x1_max");
                          c.grid.x0_min = to_double(k, items[0]);
                          c.grid.x0_max = to_double(k, items[1]);
                          c.grid.x1_min = to_double(k, items[2]);
                          c.grid.x1_max = to_double(k, items[3]);
                        },
                        [fmt](const RunConfig& c) {
                          return fmt(c.grid.x0_min) + ',' + fmt(c.grid.x0_max) + ',' + fmt(c.grid.x1_min) +
                                 ',' + fmt(c.grid.x1_max);
                        }});
    add("grid_size", {[](RunConfig& c, auto k, auto v) {
                        auto items = split_list(v);
                        if (items.size() == 1) items.push_back(items[0]);
                        if (items.size() != 2) bad_value(k, v, "width,height or a single size");
                        c.grid.width = to_uint(k, items[0]);
                        c.grid.height = to_uint(k, items[1]);
                      },
                      [](const RunConfig& c) {
                        return std::to_string(c.grid.width) + ',' + std::to_string(c.grid.height);
                      }});
    return t;
  }();
  return t;
}

const Setting* find_setting(std::string_view key) {
  std::string normalized(key);
  std::replace(normalized.begin(), normalized.end(), '-', '_');
  for (const auto& [name, s] : table())
    if (name == normalized) return &s;
  return nullptr;
}

}  // namespace

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  const Setting* s = find_setting(trim(key));
  if (!s) throw ConfigError("unknown setting '" + std::string(key) + "'");
  s->set(cfg, trim(key), trim(value));
}

void read_run_config(std::istream& in, RunConfig& cfg) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(number, "expected 'key = value'");
    try {
      apply_setting(cfg, view.substr(0, eq), view.substr(eq + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const ConfigError& e) {
      throw ParseError(number, e.what());
    }
  }
}

void read_run_config(const std::filesystem::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  read_run_config(in, cfg);
}

std::string to_text(const RunConfig& cfg) {
  std::ostringstream out;
  for (const auto& [name, s] : table()) out << name << " = " << s.get(cfg) << '\n';
  return out.str();
}

const std::vector<std::string>& setting_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, s] : table()) k.push_back(name);
    return k;
  }();
  return keys;
}

void apply_environment(RunConfig& cfg) {
  const char* seed = std::getenv("PSEUDOLAB_SEED");
  if (!seed || !*seed) return;
  try {
    apply_setting(cfg, "seeds", seed);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("PSEUDOLAB_SEED: ") + e.what());
  }
}

}  // namespace pseudolab::app
