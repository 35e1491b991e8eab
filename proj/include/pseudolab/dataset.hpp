#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "pseudolab/tensor.hpp"

namespace pseudolab {

/// Label value for a sample whose class is not known.
inline constexpr int kNoLabel = -1;

/// Training set for semi-supervised learning.
///
/// Invariants (checked by validate()):
///   * every pseudo-label row is non-negative and sums to 1 within 1e-9;
///   * a labeled sample's pseudo-label row is the one-hot of its true label.
///
/// `true_labels` of unlabeled samples are held for evaluation only and may be
/// kNoLabel when the ground truth is unavailable (e.g. a masked CSV export).
struct SslDataset {
  Tensor features;               // [N x d]
  std::vector<int> true_labels;  // N entries in [0, C) or kNoLabel
  std::vector<bool> labeled;     // N entries
  Tensor pseudo_labels;          // [N x C]
  std::size_t num_classes = 0;

  /// All samples labeled; pseudo-labels are the one-hot labels.
  static SslDataset fully_labeled(Tensor features, std::vector<int> labels, std::size_t num_classes);

  std::size_t size() const { return true_labels.size(); }
  std::size_t dim() const { return features.cols(); }
  std::size_t num_labeled() const;
  std::size_t num_unlabeled() const { return size() - num_labeled(); }
  std::vector<std::size_t> labeled_indices() const;
  std::vector<std::size_t> unlabeled_indices() const;

  /// Resets pseudo-labels: one-hot for labeled rows, uniform for the rest.
  void reset_pseudo_labels();

  /// Throws ContractError on any broken invariant.
  void validate() const;
};

/// Writes `x_0,...,x_{d-1},label` rows. Labeled samples carry their class;
/// unlabeled samples carry -1. Floats use shortest round-trip formatting.
void save_csv(const SslDataset& ds, std::ostream& out);
void save_csv(const SslDataset& ds, const std::filesystem::path& path);

/// Parses the dataset CSV. Rows with label -1 become unlabeled samples with
/// unknown truth. The class count is `num_classes` when given (labels outside
/// [0, C) are rejected) and max label + 1 otherwise. Throws ParseError with
/// the offending line number.
SslDataset load_csv(std::istream& in, std::optional<std::size_t> num_classes = std::nullopt);
SslDataset load_csv(const std::filesystem::path& path,
                    std::optional<std::size_t> num_classes = std::nullopt);

/// Fills unknown true labels of `ds` from a fully labeled copy with identical
/// features. Throws ConfigError when the two files disagree.
void attach_truth(SslDataset& ds, const SslDataset& truth);

}  // namespace pseudolab
