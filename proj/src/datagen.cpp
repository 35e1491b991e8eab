#include "pseudolab/datagen.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "pseudolab/errors.hpp"

namespace pseudolab {
namespace {

// Stream labels for Rng::derive.
constexpr std::uint64_t kStreamPoints = 1;
constexpr std::uint64_t kStreamCenters = 2;
constexpr std::uint64_t kStreamOrder = 3;
constexpr std::uint64_t kStreamMask = 4;

SslDataset shuffled(Tensor features, std::vector<int> labels, std::size_t classes, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, kStreamOrder);
  const auto order = rng.permutation(labels.size());
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) y[i] = labels[order[i]];
  return SslDataset::fully_labeled(gather_rows(features, order), std::move(y), classes);
}

}  // namespace

SslDataset gen_two_moons(const SyntheticSpec& spec) {
  if (spec.n_samples < 2) throw ConfigError("two moons needs at least 2 samples");
  if (!(spec.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  const std::size_t n_upper = spec.n_samples - spec.n_samples / 2;
  const std::size_t n_lower = spec.n_samples / 2;
  Rng rng = Rng::derive(spec.seed, kStreamPoints);

  Tensor x({spec.n_samples, 2});
  std::vector<int> y(spec.n_samples);
  auto angle = [](std::size_t i, std::size_t count) {
    return count == 1 ? 0.0 : std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1);
  };
  for (std::size_t i = 0; i < n_upper; ++i) {
    const double t = angle(i, n_upper);
    x.at(i, 0) = std::cos(t);
    x.at(i, 1) = std::sin(t);
    y[i] = 0;
  }
  for (std::size_t i = 0; i < n_lower; ++i) {
    const double t = angle(i, n_lower);
    x.at(n_upper + i, 0) = 1.0 - std::cos(t);
    x.at(n_upper + i, 1) = 0.5 - std::sin(t);
    y[n_upper + i] = 1;
  }
  if (spec.noise_sigma > 0.0) {
    for (double& v : x.values()) v += spec.noise_sigma * rng.normal();
  }
  return shuffled(std::move(x), std::move(y), 2, spec.seed);
}

Tensor blob_centers(const SyntheticSpec& spec) {
  if (spec.n_classes < 2) throw ConfigError("blobs need at least 2 classes");
  if (spec.n_features < 1) throw ConfigError("blobs need at least 1 feature");
  if (!(spec.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (!(spec.center_box > 0.0)) throw ConfigError("center box must be positive");
  constexpr int kMaxDraws = 10000;
  const double min_dist = 4.0 * spec.noise_sigma;
  Rng rng = Rng::derive(spec.seed, kStreamCenters);
  Tensor centers({spec.n_classes, spec.n_features});
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxDraws && !placed; ++attempt) {
      for (double& v : centers.row(c)) v = spec.center_box * (2.0 * rng.uniform() - 1.0);
      placed = true;
      for (std::size_t o = 0; o < c && placed; ++o) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < spec.n_features; ++j) {
          const double diff = centers.at(c, j) - centers.at(o, j);
          d2 += diff * diff;
        }
        placed = std::sqrt(d2) >= min_dist;
      }
    }
    if (!placed) {
      throw GenerationError("could not place " + std::to_string(spec.n_classes) +
                            " blob centers at least 4 sigma apart inside the box");
    }
  }
  return centers;
}

SslDataset gen_blobs(const SyntheticSpec& spec) {
  if (spec.n_samples < spec.n_classes) throw ConfigError("blobs need at least one sample per class");
  const Tensor centers = blob_centers(spec);
  Rng rng = Rng::derive(spec.seed, kStreamPoints);
  const std::size_t n = spec.n_samples, d = spec.n_features, classes = spec.n_classes;
  Tensor x({n, d});
  std::vector<int> y(n);
  std::size_t i = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const std::size_t count = n / classes + (c < n % classes ? 1 : 0);
    for (std::size_t k = 0; k < count; ++k, ++i) {
      for (std::size_t j = 0; j < d; ++j) x.at(i, j) = centers.at(c, j) + spec.noise_sigma * rng.normal();
      y[i] = static_cast<int>(c);
    }
  }
  return shuffled(std::move(x), std::move(y), classes, spec.seed);
}

SslDataset generate(const SyntheticSpec& spec) {
  switch (spec.kind) {
    case SyntheticKind::two_moons:
      return gen_two_moons(spec);
    case SyntheticKind::blobs:
      return gen_blobs(spec);
  }
  throw ConfigError("unknown dataset kind");
}

SslDataset mask_labels(const SslDataset& ds, std::size_t labels_per_class, std::uint64_t seed) {
  if (labels_per_class * ds.num_classes > ds.size()) {
    throw ConfigError(std::to_string(labels_per_class) + " labels per class need " +
                      std::to_string(labels_per_class * ds.num_classes) + " samples, dataset has " +
                      std::to_string(ds.size()));
  }
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int y = ds.true_labels[i];
    if (y == kNoLabel) continue;
    by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  SslDataset out = ds;
  out.labeled.assign(ds.size(), false);
  Rng rng = Rng::derive(seed, kStreamMask);
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    auto& pool = by_class[c];
    if (pool.size() < labels_per_class) {
      throw ConfigError("class " + std::to_string(c) + " has only " + std::to_string(pool.size()) +
                        " samples, " + std::to_string(labels_per_class) + " labels requested");
    }
    rng.shuffle(pool);
    for (std::size_t k = 0; k < labels_per_class; ++k) out.labeled[pool[k]] = true;
  }
  out.reset_pseudo_labels();
  return out;
}

Tensor augment(const Tensor& x, const AugmentSpec& spec, Rng& rng) {
  Tensor out = x;
  out.drop_grad();
  if (!spec.active()) return out;
  for (double& v : out.values()) v += spec.jitter_sigma * rng.normal();
  return out;
}

}  // namespace pseudolab
