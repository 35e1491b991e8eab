#include "pseudolab/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pseudolab/errors.hpp"

namespace pseudolab {
namespace {

double clamped_log(double p) { return std::log(std::max(p, kLogClamp)); }

void check_probs(const char* op, const Tensor& probs) {
  if (probs.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected [B x C] probabilities, got " +
                         to_string(probs.shape()));
  }
}

void check_targets(const char* op, const Tensor& probs, const Tensor& targets) {
  check_probs(op, probs);
  if (probs.shape() != targets.shape()) {
    throw DimensionError(std::string(op) + ": probabilities " + to_string(probs.shape()) +
                         " vs targets " + to_string(targets.shape()));
  }
}

void check_prior(const Tensor& probs, std::span<const double> prior) {
  check_probs("reg_all_classes", probs);
  if (prior.size() != probs.cols()) {
    throw DimensionError("reg_all_classes: prior of length " + std::to_string(prior.size()) +
                         " for " + std::to_string(probs.cols()) + " classes");
  }
}

std::vector<double> batch_mean(const Tensor& probs) {
  const std::size_t rows = probs.rows(), cols = probs.cols();
  std::vector<double> mean(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c) mean[c] += probs[i * cols + c];
  for (double& m : mean) m /= static_cast<double>(rows);
  return mean;
}

double kl_from_prior(std::span<const double> prior, std::span<const double> mean) {
  double total = 0.0;
  for (std::size_t c = 0; c < prior.size(); ++c) {
    if (prior[c] > 0.0) total += prior[c] * (std::log(prior[c]) - clamped_log(mean[c]));
  }
  return total;
}

}  // namespace

std::vector<double> per_sample_cross_entropy(const Tensor& probs, const Tensor& targets) {
  check_targets("cross_entropy_soft", probs, targets);
  const std::size_t rows = probs.rows(), cols = probs.cols();
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double t = targets[i * cols + c];
      if (t != 0.0) acc -= t * clamped_log(probs[i * cols + c]);
    }
    out[i] = acc;
  }
  return out;
}

double cross_entropy_soft(const Tensor& probs, const Tensor& targets) {
  const auto terms = per_sample_cross_entropy(probs, targets);
  double total = 0.0;
  for (double t : terms) total += t;
  return total / static_cast<double>(terms.size());
}

Var cross_entropy_soft(Var probs, const Tensor& targets) {
  const double value = cross_entropy_soft(probs.value(), targets);
  Tensor t = targets;
  t.drop_grad();
  return probs.tape()->record(
      Tensor::scalar(value), {probs},
      [probs, t = std::move(t)](Tape& tape, const Tensor&, std::span<const double> g) {
        const Tensor& p = tape.value(probs);
        auto gp = tape.grad_of(probs);
        const double scale = g[0] / static_cast<double>(p.rows());
        for (std::size_t i = 0; i < p.size(); ++i) {
          if (t[i] != 0.0 && p[i] > kLogClamp) gp[i] -= scale * t[i] / p[i];
        }
      });
}

std::vector<double> uniform_prior(std::size_t num_classes) {
  return std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes));
}

double reg_all_classes(const Tensor& probs, std::span<const double> prior) {
  check_prior(probs, prior);
  return kl_from_prior(prior, batch_mean(probs));
}

Var reg_all_classes(Var probs, std::span<const double> prior_in) {
  check_prior(probs.value(), prior_in);
  std::vector<double> prior(prior_in.begin(), prior_in.end());
  std::vector<double> mean = batch_mean(probs.value());
  const double value = kl_from_prior(prior, mean);
  return probs.tape()->record(
      Tensor::scalar(value), {probs},
      [probs, prior = std::move(prior), mean = std::move(mean)](Tape& tape, const Tensor&,
                                                                std::span<const double> g) {
        const Tensor& p = tape.value(probs);
        auto gp = tape.grad_of(probs);
        const std::size_t rows = p.rows(), cols = p.cols();
        for (std::size_t c = 0; c < cols; ++c) {
          if (prior[c] <= 0.0 || mean[c] <= kLogClamp) continue;
          // d/dp_ic of -prior_c log(mean_c) with mean_c = (1/B) sum_i p_ic
          const double d = -g[0] * prior[c] / (mean[c] * static_cast<double>(rows));
          for (std::size_t i = 0; i < rows; ++i) gp[i * cols + c] += d;
        }
      });
}

double reg_entropy(const Tensor& probs) {
  check_probs("reg_entropy", probs);
  double total = 0.0;
  for (double p : probs.values()) total -= p * clamped_log(p);
  return total / static_cast<double>(probs.rows());
}

Var reg_entropy(Var probs) {
  const double value = reg_entropy(probs.value());
  return probs.tape()->record(Tensor::scalar(value), {probs},
                              [probs](Tape& tape, const Tensor&, std::span<const double> g) {
                                const Tensor& p = tape.value(probs);
                                auto gp = tape.grad_of(probs);
                                const double scale = -g[0] / static_cast<double>(p.rows());
                                for (std::size_t i = 0; i < p.size(); ++i) {
                                  const double d = p[i] > kLogClamp ? std::log(p[i]) + 1.0 : std::log(kLogClamp);
                                  gp[i] += scale * d;
                                }
                              });
}

double total_loss(double ce, double ra, double rh, double lambda_a, double lambda_h) {
  return ce + lambda_a * ra + lambda_h * rh;
}

Var total_loss(Var ce, Var ra, Var rh, double lambda_a, double lambda_h) {
  return add(add(ce, multiply_scalar(ra, lambda_a)), multiply_scalar(rh, lambda_h));
}

double mixed_ce(const Tensor& probs, const Tensor& y_p, const Tensor& y_q, double delta) {
  return delta * cross_entropy_soft(probs, y_p) + (1.0 - delta) * cross_entropy_soft(probs, y_q);
}

Var mixed_ce(Var probs, const Tensor& y_p, const Tensor& y_q, double delta) {
  return add(multiply_scalar(cross_entropy_soft(probs, y_p), delta),
             multiply_scalar(cross_entropy_soft(probs, y_q), 1.0 - delta));
}

LossDecomposition loss_decomposition(std::span<const double> per_sample_losses,
                                     const std::vector<bool>& labeled_mask) {
  if (per_sample_losses.size() != labeled_mask.size()) {
    throw DimensionError("loss_decomposition: " + std::to_string(per_sample_losses.size()) +
                         " losses for a mask of " + std::to_string(labeled_mask.size()));
  }
  double sum_l = 0.0, sum_u = 0.0;
  LossDecomposition d;
  for (std::size_t i = 0; i < per_sample_losses.size(); ++i) {
    if (labeled_mask[i]) {
      sum_l += per_sample_losses[i];
      ++d.n_labeled;
    } else {
      sum_u += per_sample_losses[i];
      ++d.n_unlabeled;
    }
  }
  if (d.n_labeled) d.labeled_term = static_cast<double>(d.n_labeled) * (sum_l / static_cast<double>(d.n_labeled));
  if (d.n_unlabeled) {
    d.unlabeled_term = static_cast<double>(d.n_unlabeled) * (sum_u / static_cast<double>(d.n_unlabeled));
  }
  return d;
}

}  // namespace pseudolab
