#include "pseudolab/train_config.hpp"

#include "pseudolab/errors.hpp"

namespace pseudolab {

std::string_view to_string(SslMode mode) {
  switch (mode) {
    case SslMode::C:
      return "C";
    case SslMode::CStar:
      return "C*";
    case SslMode::M:
      return "M";
    case SslMode::MStar:
      return "M*";
  }
  return "?";
}

std::optional<SslMode> parse_mode(std::string_view text) {
  if (text == "C" || text == "c") return SslMode::C;
  if (text == "C*" || text == "Cstar" || text == "c*" || text == "cstar") return SslMode::CStar;
  if (text == "M" || text == "m") return SslMode::M;
  if (text == "M*" || text == "Mstar" || text == "m*" || text == "mstar") return SslMode::MStar;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (k > batch_size) throw ConfigError("k must not exceed batch_size");
  if (!(lambda_a >= 0.0) || !(lambda_h >= 0.0)) throw ConfigError("lambda_a and lambda_h must be non-negative");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(lr >= 0.0)) throw ConfigError("lr must be non-negative");
  if (!(lr_divisor > 0.0)) throw ConfigError("lr_divisor must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(augment.jitter_sigma >= 0.0)) throw ConfigError("jitter must be non-negative");
}

double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
  double lr = cfg.lr;
  for (std::size_t m : cfg.lr_milestones)
    if (epoch > m) lr /= cfg.lr_divisor;
  return lr;
}

}  // namespace pseudolab
