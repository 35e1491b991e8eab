#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pseudolab/autodiff.hpp"
#include "pseudolab/tensor.hpp"

namespace pseudolab {

/// Lower clamp applied to probabilities before every logarithm.
inline constexpr double kLogClamp = 1e-7;

// Every loss below has a plain overload returning the value and a tracked
// overload whose gradient flows back into `probs`. Targets are constants.

/// Mean over rows of -target^T log(clamp(probs)).
double cross_entropy_soft(const Tensor& probs, const Tensor& targets);
Var cross_entropy_soft(Var probs, const Tensor& targets);
/// The per-row terms of cross_entropy_soft (not divided by B).
std::vector<double> per_sample_cross_entropy(const Tensor& probs, const Tensor& targets);

/// Sum_c prior_c * log(prior_c / hbar_c), where hbar is the batch-mean
/// prediction clamped below at kLogClamp. Zero-prior classes contribute 0.
double reg_all_classes(const Tensor& probs, std::span<const double> prior);
Var reg_all_classes(Var probs, std::span<const double> prior);
std::vector<double> uniform_prior(std::size_t num_classes);

/// Mean per-row entropy -(1/B) Sum_i Sum_c p log(clamp(p)).
double reg_entropy(const Tensor& probs);
Var reg_entropy(Var probs);

/// ce + lambda_a * ra + lambda_h * rh
double total_loss(double ce, double ra, double rh, double lambda_a, double lambda_h);
Var total_loss(Var ce, Var ra, Var rh, double lambda_a, double lambda_h);

/// delta * CE(probs, y_p) + (1 - delta) * CE(probs, y_q): the cross-entropy
/// of a mixup batch against both unmixed label sets.
double mixed_ce(const Tensor& probs, const Tensor& y_p, const Tensor& y_q, double delta);
Var mixed_ce(Var probs, const Tensor& y_p, const Tensor& y_q, double delta);

/// Split of a summed loss into the labeled and unlabeled contributions,
/// N_l * mean_labeled + N_u * mean_unlabeled. A side with no samples has
/// term 0 and count 0.
struct LossDecomposition {
  double labeled_term = 0.0;
  double unlabeled_term = 0.0;
  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;

  double total() const { return labeled_term + unlabeled_term; }
};

LossDecomposition loss_decomposition(std::span<const double> per_sample_losses,
                                     const std::vector<bool>& labeled_mask);

}  // namespace pseudolab
