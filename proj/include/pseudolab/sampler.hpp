#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pseudolab/dataset.hpp"
#include "pseudolab/rng.hpp"
#include "pseudolab/train_config.hpp"

namespace pseudolab {

/// Indices of one mini-batch. The first `reserved_labeled` entries are the
/// oversampled labeled slots.
struct Minibatch {
  std::vector<std::size_t> indices;
  std::size_t reserved_labeled = 0;
};

/// Epoch plan for a labeled and an unlabeled pool.
///
/// k > 0: the unlabeled pool is shuffled and cut into chunks of
/// batch_size - k (the last chunk may be shorter); every batch gets exactly k
/// labeled slots filled from back-to-back reshuffles of the labeled pool, so
/// each labeled sample appears floor or ceil of (batches * k / N_l) times.
/// If the unlabeled pool is empty, ceil(N_l / k) labeled-only batches are made.
///
/// k == 0: labeled and unlabeled samples are pooled, shuffled and cut into
/// batches of batch_size.
///
/// Throws ConfigError when k > 0 with an empty labeled pool, or when k leaves
/// no room for unlabeled samples.
std::vector<Minibatch> make_minibatches(std::span<const std::size_t> labeled_pool,
                                        std::span<const std::size_t> unlabeled_pool, std::size_t k,
                                        std::size_t batch_size, Rng& rng);

/// Plan for `ds` using cfg.batch_size and cfg.effective_k().
std::vector<Minibatch> make_minibatches(const SslDataset& ds, const TrainConfig& cfg, Rng& rng);

}  // namespace pseudolab
