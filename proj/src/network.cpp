#include "pseudolab/network.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "pseudolab/errors.hpp"
#include "pseudolab/numfmt.hpp"

namespace pseudolab {

void MlpSpec::validate() const {
  if (layer_sizes.size() < 3) {
    throw ConfigError("an MLP needs input, at least one hidden layer and an output layer");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ConfigError("layer sizes must be positive");
  }
  if (num_classes() < 2) throw ConfigError("an MLP needs at least 2 output classes");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
}

Mlp::Mlp(MlpSpec spec, std::vector<Tensor> weights, std::vector<Tensor> biases)
    : spec_(std::move(spec)), weights_(std::move(weights)), biases_(std::move(biases)) {
  spec_.validate();
  const std::size_t layers = spec_.layer_sizes.size() - 1;
  if (weights_.size() != layers || biases_.size() != layers) {
    throw DimensionError("parameter count does not match the layer spec");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const Shape w_shape{spec_.layer_sizes[l], spec_.layer_sizes[l + 1]};
    const Shape b_shape{spec_.layer_sizes[l + 1]};
    if (weights_[l].shape() != w_shape || biases_[l].shape() != b_shape) {
      throw DimensionError("layer " + std::to_string(l) + " expects weight " + to_string(w_shape) +
                           " and bias " + to_string(b_shape) + ", got " +
                           to_string(weights_[l].shape()) + " and " + to_string(biases_[l].shape()));
    }
  }
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> out;
  out.reserve(2 * weights_.size());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

namespace {

Var dense_stack(Tape& tape, const MlpSpec& spec, std::span<const Var> weights,
                std::span<const Var> biases, Var x, bool dropout, Rng* rng) {
  if (x.value().rank() != 2 || x.value().cols() != spec.input_size()) {
    throw DimensionError("model expects " + std::to_string(spec.input_size()) +
                         " input features, got input of shape " + to_string(x.value().shape()));
  }
  if (dropout && !rng) throw ContractError("train-mode dropout needs a random stream");
  const double keep = 1.0 - spec.dropout_rate;
  Var h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = add_row(matmul(h, weights[l]), biases[l]);
    if (l + 1 == weights.size()) break;
    h = relu(h);
    if (dropout) {
      Tensor mask(h.shape());
      for (double& m : mask.values()) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
      h = multiply(h, tape.constant(std::move(mask)));
    }
  }
  return h;
}

}  // namespace

Var Mlp::forward_logits(Tape& tape, Var x, Mode mode, bool dropout_enabled, Rng* rng) {
  std::vector<Var> w, b;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    w.push_back(tape.parameter(weights_[l]));
    b.push_back(tape.parameter(biases_[l]));
  }
  const bool dropout = mode == Mode::train && dropout_enabled && spec_.dropout_rate > 0.0;
  return dense_stack(tape, spec_, w, b, x, dropout, rng);
}

Var Mlp::forward(Tape& tape, Var x, Mode mode, bool dropout_enabled, Rng* rng) {
  return softmax_rows(forward_logits(tape, x, mode, dropout_enabled, rng));
}

Tensor Mlp::logits(const Tensor& x, Mode mode, bool dropout_enabled, Rng* rng) const {
  // Runs the exact arithmetic of the tracked path on constants.
  Tape tape;
  std::vector<Var> w, b;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Tensor wl = weights_[l];
    Tensor bl = biases_[l];
    wl.drop_grad();
    bl.drop_grad();
    w.push_back(tape.constant(std::move(wl)));
    b.push_back(tape.constant(std::move(bl)));
  }
  const bool dropout = mode == Mode::train && dropout_enabled && spec_.dropout_rate > 0.0;
  Tensor input = x;
  input.drop_grad();
  Var out = dense_stack(tape, spec_, w, b, tape.constant(std::move(input)), dropout, rng);
  return out.value();
}

Tensor Mlp::forward(const Tensor& x, Mode mode, bool dropout_enabled, Rng* rng) const {
  return softmax_rows(logits(x, mode, dropout_enabled, rng));
}

bool operator==(const Mlp& a, const Mlp& b) {
  return a.spec_.layer_sizes == b.spec_.layer_sizes && a.spec_.dropout_rate == b.spec_.dropout_rate &&
         a.weights_ == b.weights_ && a.biases_ == b.biases_;
}

Mlp build_mlp(const MlpSpec& spec, std::uint64_t seed) {
  if (spec.layer_sizes.empty()) throw ContractError("build_mlp needs a layer list");
  spec.validate();
  Rng rng(seed);
  std::vector<Tensor> weights, biases;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const std::size_t fan_in = spec.layer_sizes[l];
    const std::size_t fan_out = spec.layer_sizes[l + 1];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    Tensor w({fan_in, fan_out});
    for (double& v : w.values()) v = rng.normal(0.0, stddev);
    weights.push_back(std::move(w));
    biases.emplace_back(Shape{fan_out});
  }
  return Mlp(spec, std::move(weights), std::move(biases));
}

// Checkpoint I/O

namespace {

constexpr const char* kMagic = "pseudolab-mlp";
constexpr int kFormatVersion = 1;

void write_values(std::ostream& out, std::span<const double> values, std::size_t per_line) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    out << format_double(values[i]);
    out << ((i + 1) % per_line == 0 ? '\n' : ' ');
  }
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word(const char* what) {
    std::string tok;
    if (!(in_ >> tok)) throw ConfigError(std::string("checkpoint truncated, expected ") + what);
    return tok;
  }
  void expect(const std::string& keyword) {
    if (std::string tok = word(keyword.c_str()); tok != keyword) {
      throw ConfigError("malformed checkpoint: expected '" + keyword + "', found '" + tok + "'");
    }
  }
  std::size_t count(const char* what) {
    const std::string tok = word(what);
    auto v = parse_int(tok);
    if (!v || *v < 0) throw ConfigError(std::string("malformed checkpoint: bad ") + what + " '" + tok + "'");
    return static_cast<std::size_t>(*v);
  }
  double number(const char* what) {
    const std::string tok = word(what);
    auto v = parse_double(tok);
    if (!v) throw ConfigError(std::string("malformed checkpoint: bad ") + what + " '" + tok + "'");
    return *v;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(const Mlp& model, std::ostream& out) {
  const MlpSpec& spec = model.spec();
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "dropout " << format_double(spec.dropout_rate) << '\n';
  out << "layers " << spec.layer_sizes.size();
  for (std::size_t s : spec.layer_sizes) out << ' ' << s;
  out << '\n';
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const Tensor& w = model.weight(l);
    out << "weight " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    write_values(out, w.values(), w.cols());
    const Tensor& b = model.bias(l);
    out << "bias " << l << ' ' << b.size() << '\n';
    write_values(out, b.values(), b.size());
  }
  out << "end\n";
}

void save_checkpoint(const Mlp& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  save_checkpoint(model, out);
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Mlp load_checkpoint(std::istream& in) {
  TokenReader r(in);
  r.expect(kMagic);
  if (std::size_t v = r.count("format version"); v != kFormatVersion) {
    throw ConfigError("unsupported checkpoint format version " + std::to_string(v));
  }
  MlpSpec spec;
  r.expect("dropout");
  spec.dropout_rate = r.number("dropout rate");
  r.expect("layers");
  const std::size_t n = r.count("layer count");
  for (std::size_t i = 0; i < n; ++i) spec.layer_sizes.push_back(r.count("layer size"));
  spec.validate();
  std::vector<Tensor> weights, biases;
  for (std::size_t l = 0; l + 1 < n; ++l) {
    r.expect("weight");
    if (r.count("layer index") != l) throw ConfigError("checkpoint layers out of order");
    const std::size_t rows = r.count("rows");
    const std::size_t cols = r.count("cols");
    if (rows != spec.layer_sizes[l] || cols != spec.layer_sizes[l + 1]) {
      throw DimensionError("checkpoint weight " + std::to_string(l) + " has the wrong shape");
    }
    Tensor w({rows, cols});
    for (double& v : w.values()) v = r.number("weight value");
    r.expect("bias");
    if (r.count("layer index") != l) throw ConfigError("checkpoint layers out of order");
    const std::size_t len = r.count("bias length");
    if (len != cols) throw DimensionError("checkpoint bias " + std::to_string(l) + " has the wrong length");
    Tensor b({len});
    for (double& v : b.values()) v = r.number("bias value");
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }
  r.expect("end");
  return Mlp(std::move(spec), std::move(weights), std::move(biases));
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace pseudolab
