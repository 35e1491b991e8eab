#pragma once

#include <cstddef>
#include <cstdint>

#include "pseudolab/dataset.hpp"
#include "pseudolab/rng.hpp"
#include "pseudolab/tensor.hpp"

namespace pseudolab {

enum class SyntheticKind { two_moons, blobs };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::two_moons;
  std::size_t n_samples = 1000;
  double noise_sigma = 0.1;
  // blobs only
  std::size_t n_classes = 2;
  std::size_t n_features = 2;
  double center_box = 10.0;  // centers drawn uniformly in [-box, box]^d
  std::uint64_t seed = 0;
};

/// Two interleaving half circles of radius 1. Class 0 is the upper half of the
/// circle around (0, 0); class 1 the lower half of the circle around (1, 0.5). Isotropic
/// Gaussian noise of `noise_sigma` is added and the sample order shuffled.
/// Returns a fully labeled dataset.
SslDataset gen_two_moons(const SyntheticSpec& spec);

/// Isotropic Gaussian clusters around random centers whose pairwise distance
/// is at least 4 * noise_sigma. Throws GenerationError when no such centers
/// are found within a bounded number of draws.
SslDataset gen_blobs(const SyntheticSpec& spec);

/// Dispatches on spec.kind.
SslDataset generate(const SyntheticSpec& spec);

/// The cluster centers gen_blobs uses for `spec`, one row per class.
Tensor blob_centers(const SyntheticSpec& spec);

/// Keeps exactly `labels_per_class` labels per class, chosen uniformly with
/// `seed`; all other samples become unlabeled. Features and true labels are
/// untouched; pseudo-labels are reset (one-hot / uniform). Throws ConfigError
/// when some class has too few samples.
SslDataset mask_labels(const SslDataset& ds, std::size_t labels_per_class, std::uint64_t seed);

/// Additive Gaussian input jitter, the tabular stand-in for image
/// augmentation. Never applied to the clean pseudo-labeling pass.
struct AugmentSpec {
  double jitter_sigma = 0.0;
  bool enabled = false;

  bool active() const { return enabled && jitter_sigma > 0.0; }
};

/// x + N(0, jitter_sigma^2) elementwise when active, otherwise a copy of x.
/// Consumes `rng` only when active.
Tensor augment(const Tensor& x, const AugmentSpec& spec, Rng& rng);

}  // namespace pseudolab
