#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pseudolab/datagen.hpp"

namespace pseudolab {

/// Ablation modes: plain cross-entropy (C), mixup (M), and either of them
/// with a guaranteed minimum of k labeled samples per mini-batch (*).
enum class SslMode { C, CStar, M, MStar };

std::string_view to_string(SslMode mode);
/// Accepts "C", "C*", "M", "M*" (also "Cstar"/"Mstar").
std::optional<SslMode> parse_mode(std::string_view text);

struct TrainConfig {
  double lambda_a = 0.8;
  double lambda_h = 0.4;
  double alpha = 1.0;
  std::size_t k = 16;
  std::size_t batch_size = 100;
  double lr = 0.1;
  std::vector<std::size_t> lr_milestones{50, 100};
  double lr_divisor = 10.0;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t warmup_epochs = 10;
  std::size_t total_epochs = 150;
  double dropout_rate = 0.0;
  AugmentSpec augment;
  std::uint64_t seed = 1;
  SslMode mode = SslMode::MStar;

  bool uses_mixup() const { return mode == SslMode::M || mode == SslMode::MStar; }
  bool uses_min_k() const { return mode == SslMode::CStar || mode == SslMode::MStar; }
  /// Reserved labeled slots per batch: k in the starred modes, 0 otherwise.
  std::size_t effective_k() const { return uses_min_k() ? k : 0; }

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Learning rate used during training epoch `epoch` (1-based): the base rate
/// divided by lr_divisor once for every milestone already passed, so with
/// milestones {250, 350} epochs 1-250 use lr, 251-350 lr/10, the rest lr/100.
double learning_rate_at(const TrainConfig& cfg, std::size_t epoch);

}  // namespace pseudolab
