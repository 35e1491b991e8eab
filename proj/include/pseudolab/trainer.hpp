#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "pseudolab/dataset.hpp"
#include "pseudolab/diagnostics.hpp"
#include "pseudolab/mixup.hpp"
#include "pseudolab/network.hpp"
#include "pseudolab/rng.hpp"
#include "pseudolab/sgd.hpp"
#include "pseudolab/train_config.hpp"

namespace pseudolab {

/// Clean-pass softmax rows collected during one epoch.
class PredictionBuffer {
 public:
  PredictionBuffer(std::size_t num_samples, std::size_t num_classes);

  void reset();
  void store(std::size_t index, std::span<const double> probs);
  bool filled(std::size_t index) const { return filled_.at(index); }
  std::span<const double> row(std::size_t index) const { return probs_.row(index); }
  std::vector<std::size_t> filled_indices() const;
  std::size_t size() const { return filled_.size(); }
  std::size_t num_classes() const { return probs_.cols(); }

 private:
  Tensor probs_;
  std::vector<bool> filled_;
};

/// Held-out evaluation data.
struct EvalSet {
  Tensor features;
  std::vector<int> labels;
};

/// Loss values of one optimization step.
struct StepLosses {
  double total = 0.0;
  double ce = 0.0;
  double ra = 0.0;
  double rh = 0.0;
  /// Per-row cross-entropy; under mixup delta * CE_p + (1 - delta) * CE_q.
  std::vector<double> per_sample;
};

/// One SGD step on a batch: train-mode forward (dropout on), loss
/// CE + lambda_a * R_A + lambda_h * R_H, backward, update. With `draw` the
/// inputs are mixed and CE becomes the mixed cross-entropy; both regularizers
/// always see the outputs of the pass that is backpropagated. Set
/// `with_regularizers` to false for plain cross-entropy (warm-up).
StepLosses train_step(Mlp& model, SgdState& optimizer, const Tensor& x, const Tensor& targets,
                      const TrainConfig& cfg, const MixupDraw* draw, Rng& rng,
                      bool with_regularizers = true);

/// Supervised phase on the labeled samples only: plain cross-entropy, no
/// mixup, no regularizers. Each warm-up epoch runs ceil(N / batch_size) steps
/// on batches of min(batch_size, N_l) labeled samples drawn by cycling the
/// labeled pool. Afterwards every unlabeled pseudo-label is replaced by the
/// eval-mode prediction of the model. Returns the mean CE of the last epoch
/// (0 when warmup_epochs is 0).
double warmup(Mlp& model, SslDataset& ds, const TrainConfig& cfg, Rng& rng);

/// One pseudo-labeling epoch. For every mini-batch: gather features and
/// current pseudo-labels, augment (if enabled), optionally mix, step, then run
/// a clean eval-mode pass on the original inputs and store it in `buffer`.
/// Fills the loss, labeled/unlabeled split, r_t, train_error and lr
/// fields of the result; val_error and pseudo_acc are left for the caller.
EpochMetrics train_epoch(Mlp& model, SgdState& optimizer, const SslDataset& ds, const TrainConfig& cfg,
                         PredictionBuffer& buffer, std::size_t epoch, Rng& rng);

/// Replaces the pseudo-label of every unlabeled sample by its buffered clean
/// prediction. Labeled rows are never touched. Throws ContractError if some
/// unlabeled sample was not visited.
void update_pseudo_labels(SslDataset& ds, const PredictionBuffer& buffer);

using EpochObserver = std::function<void(const EpochMetrics&, const Mlp&, const SslDataset&)>;

/// Warm-up, then cfg.total_epochs of train_epoch + update_pseudo_labels with
/// the step learning-rate schedule. Returns one metrics row for the warm-up
/// model (epoch 0) followed by one per epoch. `observer` is called after each
/// row is complete.
std::vector<EpochMetrics> run_training(Mlp& model, SslDataset& ds, const TrainConfig& cfg,
                                       const EvalSet* validation = nullptr,
                                       const EpochObserver& observer = {});

}  // namespace pseudolab
