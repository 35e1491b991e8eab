#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "pseudolab/dataset.hpp"
#include "pseudolab/tensor.hpp"

namespace pseudolab {

/// One row of the training log. Epoch 0 describes the warm-up model.
struct EpochMetrics {
  std::size_t epoch = 0;
  double loss_total = 0.0;  // batch means, averaged over the epoch
  double loss_ce = 0.0;
  double loss_ra = 0.0;
  double loss_rh = 0.0;
  double term_labeled = 0.0;  // summed per-sample CE, labeled samples
  double term_unlabeled = 0.0;
  std::optional<double> r_t;  // certainty of incorrect predictions, all samples
  double train_error = 0.0;
  double val_error = 0.0;
  std::optional<double> pseudo_acc;
  double lr = 0.0;
  // Not part of metrics.csv.
  std::optional<double> r_t_unlabeled;
  std::size_t n_incorrect = 0;
};

/// Row argmax; ties go to the lowest class index.
std::size_t argmax(std::span<const double> row);
std::vector<int> predictions(const Tensor& probs);

/// r_t = -(1/M) sum over the M rows whose prediction differs from the truth
/// of U^T log(clamp(p)), U uniform. Rows with unknown truth are ignored.
/// nullopt when M = 0.
std::optional<double> certainty_incorrect(const Tensor& probs, std::span<const int> predictions,
                                          std::span<const int> truths);

/// Fraction of rows whose argmax differs from the truth. Rows with unknown
/// truth (kNoLabel) are ignored; 0 when none remain.
double error_rate(const Tensor& probs, std::span<const int> truths);

/// Fraction of unlabeled samples (with known truth) whose pseudo-label argmax
/// is the true class; nullopt when there are none.
std::optional<double> pseudo_label_accuracy(const SslDataset& ds);

// metrics.csv: epoch,loss_total,loss_ce,loss_ra,loss_rh,term_labeled,
//              term_unlabeled,r_t,train_error,val_error,pseudo_acc,lr
// Absent values are empty fields.
void write_metrics_csv(std::span<const EpochMetrics> rows, std::ostream& out);
void write_metrics_csv(std::span<const EpochMetrics> rows, const std::filesystem::path& path);
std::vector<EpochMetrics> read_metrics_csv(const std::filesystem::path& path);

// metrics_extra.csv: epoch,r_t_unlabeled,n_incorrect
void write_extra_metrics_csv(std::span<const EpochMetrics> rows, const std::filesystem::path& path);

/// index,is_labeled,y_true,p_0..p_{C-1}; unknown truths are written as -1.
void write_pseudo_label_snapshot(const SslDataset& ds, std::ostream& out);
void write_pseudo_label_snapshot(const SslDataset& ds, const std::filesystem::path& path);

}  // namespace pseudolab
