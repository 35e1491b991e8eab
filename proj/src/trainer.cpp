#include "pseudolab/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "pseudolab/datagen.hpp"
#include "pseudolab/errors.hpp"
#include "pseudolab/losses.hpp"
#include "pseudolab/numfmt.hpp"
#include "pseudolab/sampler.hpp"

namespace pseudolab {

PredictionBuffer::PredictionBuffer(std::size_t num_samples, std::size_t num_classes)
    : probs_({num_samples, num_classes}), filled_(num_samples, false) {}

void PredictionBuffer::reset() { std::fill(filled_.begin(), filled_.end(), false); }

void PredictionBuffer::store(std::size_t index, std::span<const double> probs) {
  if (probs.size() != probs_.cols()) throw DimensionError("prediction row has the wrong class count");
  auto dst = probs_.row(index);
  std::copy(probs.begin(), probs.end(), dst.begin());
  filled_.at(index) = true;
}

std::vector<std::size_t> PredictionBuffer::filled_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < filled_.size(); ++i)
    if (filled_[i]) out.push_back(i);
  return out;
}

namespace {

constexpr std::uint64_t kStreamWarmup = 101;
constexpr std::uint64_t kStreamTrain = 102;

void check_target_rows(const Tensor& targets, std::span<const std::size_t> indices) {
  for (std::size_t r = 0; r < targets.rows(); ++r) {
    double total = 0.0;
    bool ok = true;
    for (double p : targets.row(r)) {
      ok = ok && p >= 0.0;
      total += p;
    }
    if (!ok || !(std::abs(total - 1.0) <= 1e-6)) {
      throw ContractError("pseudo-label row of sample " + std::to_string(indices[r]) +
                          " is not a distribution (unfilled?)");
    }
  }
}

// Prediction-derived fields: r_t (all and unlabeled-only) and train error.
void fill_prediction_metrics(EpochMetrics& m, const Tensor& probs, std::span<const int> truths,
                             const std::vector<bool>& labeled) {
  const auto preds = predictions(probs);
  m.r_t = certainty_incorrect(probs, preds, truths);
  m.train_error = error_rate(probs, truths);
  m.n_incorrect = 0;
  std::vector<int> unlabeled_truths(truths.begin(), truths.end());
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] != kNoLabel && preds[i] != truths[i]) ++m.n_incorrect;
    if (labeled[i]) unlabeled_truths[i] = kNoLabel;
  }
  m.r_t_unlabeled = certainty_incorrect(probs, preds, unlabeled_truths);
}

// val_error: held-out set if any, otherwise the unlabeled training samples
// (the transductive setting), otherwise the training error.
double validation_error(const Mlp& model, const EvalSet* validation,
                        const Tensor& unlabeled_probs, std::span<const int> unlabeled_truths,
                        double train_error) {
  if (validation) return error_rate(model.predict(validation->features), validation->labels);
  const bool any_known = std::any_of(unlabeled_truths.begin(), unlabeled_truths.end(),
                                     [](int y) { return y != kNoLabel; });
  if (!any_known) return train_error;
  return error_rate(unlabeled_probs, unlabeled_truths);
}

}  // namespace

StepLosses train_step(Mlp& model, SgdState& optimizer, const Tensor& x, const Tensor& targets,
                      const TrainConfig& cfg, const MixupDraw* draw, Rng& rng, bool with_regularizers) {
  Tape tape;
  StepLosses out;
  std::optional<MixedBatch> mixed;
  if (draw) mixed = mix_batch(x, targets, *draw);
  Tensor input = mixed ? mixed->x : x;
  input.drop_grad();

  Var probs = model.forward(tape, tape.constant(std::move(input)), Mode::train, true, &rng);
  Var ce = mixed ? mixed_ce(probs, mixed->y_p, mixed->y_q, mixed->delta) : cross_entropy_soft(probs, targets);
  Var loss = ce;
  if (with_regularizers) {
    const auto prior = uniform_prior(targets.cols());
    Var ra = reg_all_classes(probs, prior);
    Var rh = reg_entropy(probs);
    loss = total_loss(ce, ra, rh, cfg.lambda_a, cfg.lambda_h);
    out.ra = ra.value().item();
    out.rh = rh.value().item();
  }
  out.ce = ce.value().item();
  out.total = loss.value().item();
  if (!std::isfinite(out.total)) throw ContractError("non-finite training loss");

  if (mixed) {
    const auto lp = per_sample_cross_entropy(probs.value(), mixed->y_p);
    const auto lq = per_sample_cross_entropy(probs.value(), mixed->y_q);
    out.per_sample.resize(lp.size());
    for (std::size_t i = 0; i < lp.size(); ++i) out.per_sample[i] = mixed->delta * lp[i] + (1.0 - mixed->delta) * lq[i];
  } else {
    out.per_sample = per_sample_cross_entropy(probs.value(), targets);
  }

  tape.backward(loss);
  auto params = model.parameters();
  sgd_step(params, optimizer);
  return out;
}

double warmup(Mlp& model, SslDataset& ds, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  double last_epoch_ce = 0.0;
  if (cfg.warmup_epochs > 0) {
    const auto labeled = ds.labeled_indices();
    if (labeled.empty()) throw ConfigError("warm-up needs at least one labeled sample");
    auto params = model.parameters();
    SgdState optimizer = make_sgd_state(params, cfg.lr, cfg.momentum, cfg.weight_decay);
    const std::size_t steps = (ds.size() + cfg.batch_size - 1) / cfg.batch_size;
    const std::size_t batch = std::min(cfg.batch_size, labeled.size());
    std::vector<std::size_t> stream;
    std::size_t cursor = 0;
    for (std::size_t epoch = 0; epoch < cfg.warmup_epochs; ++epoch) {
      double sum_ce = 0.0;
      for (std::size_t s = 0; s < steps; ++s) {
        std::vector<std::size_t> idx;
        while (idx.size() < batch) {
          if (cursor == stream.size()) {
            stream.assign(labeled.begin(), labeled.end());
            rng.shuffle(stream);
            cursor = 0;
          }
          idx.push_back(stream[cursor++]);
        }
        const Tensor x = augment(gather_rows(ds.features, idx), cfg.augment, rng);
        const Tensor y = gather_rows(ds.pseudo_labels, idx);
        sum_ce += train_step(model, optimizer, x, y, cfg, nullptr, rng, false).ce;
      }
      last_epoch_ce = sum_ce / static_cast<double>(steps);
    }
  }
  const auto unlabeled = ds.unlabeled_indices();
  if (!unlabeled.empty()) {
    const Tensor probs = model.predict(gather_rows(ds.features, unlabeled));
    for (std::size_t r = 0; r < unlabeled.size(); ++r) {
      auto src = probs.row(r);
      std::copy(src.begin(), src.end(), ds.pseudo_labels.row(unlabeled[r]).begin());
    }
  }
  return last_epoch_ce;
}

EpochMetrics train_epoch(Mlp& model, SgdState& optimizer, const SslDataset& ds, const TrainConfig& cfg,
                         PredictionBuffer& buffer, std::size_t epoch, Rng& rng) {
  if (buffer.size() != ds.size() || buffer.num_classes() != ds.num_classes) {
    throw DimensionError("prediction buffer does not match the dataset");
  }
  buffer.reset();
  EpochMetrics m;
  m.epoch = epoch;
  m.lr = learning_rate_at(cfg, epoch);
  optimizer.learning_rate = m.lr;

  const auto batches = make_minibatches(ds, cfg, rng);
  for (const Minibatch& mb : batches) {
    const Tensor x = gather_rows(ds.features, mb.indices);
    const Tensor y = gather_rows(ds.pseudo_labels, mb.indices);
    check_target_rows(y, mb.indices);

    const Tensor x_train = augment(x, cfg.augment, rng);
    std::optional<MixupDraw> draw;
    if (cfg.uses_mixup()) draw = sample_mixup(cfg.alpha, mb.indices.size(), rng);
    const StepLosses s = train_step(model, optimizer, x_train, y, cfg, draw ? &*draw : nullptr, rng);

    m.loss_total += s.total;
    m.loss_ce += s.ce;
    m.loss_ra += s.ra;
    m.loss_rh += s.rh;
    std::vector<bool> mask(mb.indices.size());
    for (std::size_t r = 0; r < mb.indices.size(); ++r) mask[r] = ds.labeled[mb.indices[r]];
    const LossDecomposition d = loss_decomposition(s.per_sample, mask);
    m.term_labeled += d.labeled_term;
    m.term_unlabeled += d.unlabeled_term;

    // Clean pass: original inputs, eval mode, no dropout, no mixing.
    const Tensor clean = model.predict(x);
    for (std::size_t r = 0; r < mb.indices.size(); ++r) buffer.store(mb.indices[r], clean.row(r));
  }
  if (!batches.empty()) {
    const double nb = static_cast<double>(batches.size());
    m.loss_total /= nb;
    m.loss_ce /= nb;
    m.loss_ra /= nb;
    m.loss_rh /= nb;
  }

  const auto visited = buffer.filled_indices();
  if (!visited.empty()) {
    Tensor probs({visited.size(), ds.num_classes});
    std::vector<int> truths(visited.size());
    std::vector<bool> labeled(visited.size());
    for (std::size_t r = 0; r < visited.size(); ++r) {
      auto src = buffer.row(visited[r]);
      std::copy(src.begin(), src.end(), probs.row(r).begin());
      truths[r] = ds.true_labels[visited[r]];
      labeled[r] = ds.labeled[visited[r]];
    }
    fill_prediction_metrics(m, probs, truths, labeled);
  }
  return m;
}

void update_pseudo_labels(SslDataset& ds, const PredictionBuffer& buffer) {
  if (buffer.size() != ds.size() || buffer.num_classes() != ds.num_classes) {
    throw DimensionError("prediction buffer does not match the dataset");
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labeled[i]) continue;
    if (!buffer.filled(i)) {
      throw ContractError("unlabeled sample " + std::to_string(i) + " has no prediction this epoch");
    }
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labeled[i]) continue;
    auto src = buffer.row(i);
    std::copy(src.begin(), src.end(), ds.pseudo_labels.row(i).begin());
  }
}

std::vector<EpochMetrics> run_training(Mlp& model, SslDataset& ds, const TrainConfig& cfg,
                                       const EvalSet* validation, const EpochObserver& observer) {
  cfg.validate();
  ds.validate();
  if (cfg.uses_min_k() && cfg.k > 0 && ds.num_labeled() == 0) {
    throw ConfigError("mode " + std::string(to_string(cfg.mode)) + " needs labeled samples");
  }
  if (model.spec().num_classes() != ds.num_classes || model.spec().input_size() != ds.dim()) {
    throw DimensionError("model shape does not match the dataset");
  }

  const auto unlabeled = ds.unlabeled_indices();
  std::vector<int> unlabeled_truths;
  for (std::size_t i : unlabeled) unlabeled_truths.push_back(ds.true_labels[i]);
  std::vector<EpochMetrics> history;

  auto unlabeled_probs = [&] {
    Tensor p({std::max<std::size_t>(unlabeled.size(), 1), ds.num_classes});
    for (std::size_t r = 0; r < unlabeled.size(); ++r) {
      auto src = ds.pseudo_labels.row(unlabeled[r]);
      std::copy(src.begin(), src.end(), p.row(r).begin());
    }
    return p;
  };

  Rng warm_rng = Rng::derive(cfg.seed, kStreamWarmup);
  EpochMetrics w;
  w.epoch = 0;
  w.lr = cfg.lr;
  w.loss_ce = w.loss_total = warmup(model, ds, cfg, warm_rng);
  {
    const Tensor probs = model.predict(ds.features);
    fill_prediction_metrics(w, probs, ds.true_labels, ds.labeled);
    const auto per_sample = per_sample_cross_entropy(probs, ds.pseudo_labels);
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (ds.labeled[i]) w.term_labeled += per_sample[i];
  }
  w.pseudo_acc = pseudo_label_accuracy(ds);
  w.val_error = unlabeled.empty() && !validation
                    ? w.train_error
                    : validation_error(model, validation, unlabeled_probs(), unlabeled_truths, w.train_error);
  history.push_back(w);
  if (observer) observer(w, model, ds);

  auto params = model.parameters();
  SgdState optimizer = make_sgd_state(params, cfg.lr, cfg.momentum, cfg.weight_decay);
  PredictionBuffer buffer(ds.size(), ds.num_classes);
  Rng train_rng = Rng::derive(cfg.seed, kStreamTrain);
  for (std::size_t epoch = 1; epoch <= cfg.total_epochs; ++epoch) {
    EpochMetrics m = train_epoch(model, optimizer, ds, cfg, buffer, epoch, train_rng);
    update_pseudo_labels(ds, buffer);
    m.pseudo_acc = pseudo_label_accuracy(ds);
    m.val_error = unlabeled.empty() && !validation
                      ? m.train_error
                      : validation_error(model, validation, unlabeled_probs(), unlabeled_truths, m.train_error);
    history.push_back(m);
    if (observer) observer(m, model, ds);
  }
  return history;
}

}  // namespace pseudolab
