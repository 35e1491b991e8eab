#include "pseudolab/sampler.hpp"

#include <algorithm>

#include "pseudolab/errors.hpp"

namespace pseudolab {

std::vector<Minibatch> make_minibatches(std::span<const std::size_t> labeled_pool,
                                        std::span<const std::size_t> unlabeled_pool, std::size_t k,
                                        std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (k > batch_size) throw ConfigError("k exceeds the batch size");
  std::vector<Minibatch> batches;

  if (k == 0) {
    std::vector<std::size_t> all(labeled_pool.begin(), labeled_pool.end());
    all.insert(all.end(), unlabeled_pool.begin(), unlabeled_pool.end());
    rng.shuffle(all);
    for (std::size_t start = 0; start < all.size(); start += batch_size) {
      const std::size_t end = std::min(all.size(), start + batch_size);
      batches.push_back({std::vector<std::size_t>(all.begin() + start, all.begin() + end), 0});
    }
    return batches;
  }

  if (labeled_pool.empty()) {
    throw ConfigError("a minimum of " + std::to_string(k) + " labeled samples per batch needs labeled data");
  }
  const std::size_t free_slots = batch_size - k;
  if (free_slots == 0 && !unlabeled_pool.empty()) {
    throw ConfigError("k equals the batch size, leaving no slots for unlabeled samples");
  }
  std::vector<std::size_t> unlabeled(unlabeled_pool.begin(), unlabeled_pool.end());
  rng.shuffle(unlabeled);
  const std::size_t num_batches = unlabeled.empty()
                                      ? (labeled_pool.size() + k - 1) / k
                                      : (unlabeled.size() + free_slots - 1) / free_slots;

  std::vector<std::size_t> stream;
  stream.reserve(num_batches * k + labeled_pool.size());
  while (stream.size() < num_batches * k) {
    std::vector<std::size_t> round(labeled_pool.begin(), labeled_pool.end());
    rng.shuffle(round);
    stream.insert(stream.end(), round.begin(), round.end());
  }

  batches.reserve(num_batches);
  for (std::size_t b = 0; b < num_batches; ++b) {
    Minibatch mb;
    mb.reserved_labeled = k;
    mb.indices.assign(stream.begin() + b * k, stream.begin() + (b + 1) * k);
    const std::size_t start = b * free_slots;
    const std::size_t end = std::min(unlabeled.size(), start + free_slots);
    if (start < end) mb.indices.insert(mb.indices.end(), unlabeled.begin() + start, unlabeled.begin() + end);
    batches.push_back(std::move(mb));
  }
  return batches;
}

std::vector<Minibatch> make_minibatches(const SslDataset& ds, const TrainConfig& cfg, Rng& rng) {
  const auto labeled = ds.labeled_indices();
  const auto unlabeled = ds.unlabeled_indices();
  return make_minibatches(labeled, unlabeled, cfg.effective_k(), cfg.batch_size, rng);
}

}  // namespace pseudolab
