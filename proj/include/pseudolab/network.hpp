#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "pseudolab/autodiff.hpp"
#include "pseudolab/rng.hpp"
#include "pseudolab/tensor.hpp"

namespace pseudolab {

/// Fully connected ReLU network: [d_in, h_1, ..., h_L, C].
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  double dropout_rate = 0.0;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  /// Throws ConfigError unless there is at least one hidden layer, all sizes
  /// are positive, C >= 2 and the dropout rate lies in [0, 1).
  void validate() const;
};

enum class Mode { train, eval };

class Mlp {
 public:
  Mlp(MlpSpec spec, std::vector<Tensor> weights, std::vector<Tensor> biases);

  const MlpSpec& spec() const noexcept { return spec_; }
  std::size_t num_layers() const noexcept { return weights_.size(); }
  const Tensor& weight(std::size_t layer) const { return weights_.at(layer); }
  const Tensor& bias(std::size_t layer) const { return biases_.at(layer); }
  Tensor& weight(std::size_t layer) { return weights_.at(layer); }
  Tensor& bias(std::size_t layer) { return biases_.at(layer); }

  /// Weights and biases interleaved per layer, in a stable order.
  std::vector<Tensor*> parameters();

  /// Records the forward pass on `tape` and returns the softmax output.
  /// Dropout is applied after every hidden activation only when
  /// mode == train and dropout_enabled; kept units are scaled by 1/(1-p).
  /// `rng` is only consumed when dropout is active.
  Var forward(Tape& tape, Var x, Mode mode, bool dropout_enabled, Rng* rng);

  /// Same computation without gradient tracking.
  Tensor forward(const Tensor& x, Mode mode, bool dropout_enabled, Rng* rng) const;

  /// The pre-softmax outputs of forward().
  Var forward_logits(Tape& tape, Var x, Mode mode, bool dropout_enabled, Rng* rng);
  Tensor logits(const Tensor& x, Mode mode, bool dropout_enabled, Rng* rng) const;

  /// Eval-mode probabilities.
  Tensor predict(const Tensor& x) const { return forward(x, Mode::eval, false, nullptr); }

  friend bool operator==(const Mlp& a, const Mlp& b);

 private:
  MlpSpec spec_;
  std::vector<Tensor> weights_;  // [in x out]
  std::vector<Tensor> biases_;   // [out]
};

/// He-normal weights (stddev sqrt(2 / fan_in)), zero biases. Deterministic in
/// `seed`. An empty layer list is a ContractError; other invalid specs throw
/// ConfigError.
Mlp build_mlp(const MlpSpec& spec, std::uint64_t seed);

// Checkpoint format (text, one token stream):
//
//   pseudolab-mlp 1
//   dropout <rate>
//   layers <n> <size_0> ... <size_{n-1}>
//   weight <layer> <rows> <cols>
//   <rows lines of cols values>
//   bias <layer> <len>
//   <len values>
//   ...
//   end
//
// Values use the shortest decimal form that parses back to the same double,
// so load(save(m)) is bit-identical.
void save_checkpoint(const Mlp& model, std::ostream& out);
void save_checkpoint(const Mlp& model, const std::filesystem::path& path);
Mlp load_checkpoint(std::istream& in);
Mlp load_checkpoint(const std::filesystem::path& path);

}  // namespace pseudolab
