#include <cmath>
#include <limits>

#include "doctest.h"
#include "pseudolab/datagen.hpp"
#include "pseudolab/errors.hpp"

using namespace pseudolab;

namespace {

double sq_dist(const Tensor& x, std::size_t i, const Tensor& y, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < x.cols(); ++c) s += (x.at(i, c) - y.at(j, c)) * (x.at(i, c) - y.at(j, c));
  return s;
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_SUITE("datagen") {
  TEST_CASE("noise-free moons lie on their circles") {
    SyntheticSpec spec;
    spec.noise_sigma = 0.0;
    spec.n_samples = 200;
    const SslDataset ds = gen_two_moons(spec);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const double x = ds.features.at(i, 0), y = ds.features.at(i, 1);
      if (ds.true_labels[i] == 0) {
        CHECK(std::abs(x * x + y * y - 1.0) < 1e-12);
        CHECK(y >= -1e-12);
      } else {
        CHECK(std::abs((x - 1) * (x - 1) + (y - 0.5) * (y - 0.5) - 1.0) < 1e-12);
        CHECK(y - 0.5 <= 1e-12);
      }
    }
  }

  TEST_CASE("moons are balanced and well separated") {
    SyntheticSpec spec;
    spec.seed = 3;
    const SslDataset ds = gen_two_moons(spec);
    CHECK(ds.size() == 1000);
    CHECK(ds.num_labeled() == 1000);
    std::size_t ones = 0;
    for (int y : ds.true_labels) ones += y == 1;
    CHECK(ones == 500);
    // Leave-one-out 1-nearest-neighbour accuracy.
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      int label = -1;
      for (std::size_t j = 0; j < ds.size(); ++j) {
        if (j == i) continue;
        const double d = sq_dist(ds.features, i, ds.features, j);
        if (d < best) {
          best = d;
          label = ds.true_labels[j];
        }
      }
      correct += label == ds.true_labels[i];
    }
    CHECK(double(correct) / ds.size() >= 0.99);
  }

  TEST_CASE("generators are deterministic in the seed") {
    SyntheticSpec spec;
    spec.seed = 8;
    CHECK(gen_two_moons(spec).features == gen_two_moons(spec).features);
    SyntheticSpec other = spec;
    other.seed = 9;
    CHECK_FALSE(gen_two_moons(spec).features == gen_two_moons(other).features);
    spec.kind = SyntheticKind::blobs;
    CHECK(generate(spec).features == gen_blobs(spec).features);
  }

  TEST_CASE("blobs are balanced and centers are far apart") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::blobs;
    spec.n_samples = 1003;
    spec.n_classes = 4;
    spec.n_features = 3;
    spec.noise_sigma = 1.5;
    spec.seed = 2;
    const SslDataset ds = gen_blobs(spec);
    CHECK(ds.dim() == 3);
    std::vector<std::size_t> counts(4, 0);
    for (int y : ds.true_labels) ++counts[y];
    for (std::size_t c : counts) CHECK((c == 250 || c == 251));
    const Tensor centers = blob_centers(spec);
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = a + 1; b < 4; ++b) CHECK(std::sqrt(sq_dist(centers, a, centers, b)) >= 6.0);
  }

  TEST_CASE("zero-noise blobs sit on their centers") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::blobs;
    spec.noise_sigma = 0.0;
    spec.n_samples = 30;
    spec.n_classes = 3;
    const SslDataset ds = gen_blobs(spec);
    const Tensor centers = blob_centers(spec);
    for (std::size_t i = 0; i < ds.size(); ++i)
      CHECK(sq_dist(ds.features, i, centers, ds.true_labels[i]) == 0.0);
  }

  TEST_CASE("nearest-center error stays below the pairwise bound") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SyntheticSpec spec;
      spec.kind = SyntheticKind::blobs;
      spec.n_samples = 4000;
      spec.n_classes = 3;
      spec.noise_sigma = 1.0;
      spec.seed = seed;
      const SslDataset ds = gen_blobs(spec);
      const Tensor centers = blob_centers(spec);
      // Union bound on the Bayes error of equal-prior isotropic clusters.
      double bound = 0.0;
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
          if (a != b) bound += std_normal_cdf(-std::sqrt(sq_dist(centers, a, centers, b)) / 2.0) / 3.0;
      std::size_t wrong = 0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < 3; ++c)
          if (sq_dist(ds.features, i, centers, c) < sq_dist(ds.features, i, centers, best)) best = c;
        wrong += int(best) != ds.true_labels[i];
      }
      const double err = double(wrong) / ds.size();
      CHECK(err <= bound + 3.0 * std::sqrt(std::max(bound, 1e-4) / ds.size()));
      if (bound < 0.005) CHECK(err < 0.01);
    }
  }

  TEST_CASE("impossible center spacing") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::blobs;
    spec.n_classes = 10;
    spec.noise_sigma = 5.0;
    spec.center_box = 1.0;
    CHECK_THROWS_AS(gen_blobs(spec), GenerationError);
    spec.n_classes = 1;
    CHECK_THROWS_AS(gen_blobs(spec), ConfigError);
  }

  TEST_CASE("label masking") {
    SyntheticSpec spec;
    spec.seed = 5;
    const SslDataset full = gen_two_moons(spec);
    const SslDataset m = mask_labels(full, 4, 7);
    CHECK(m.num_labeled() == 8);
    std::vector<int> per_class(2, 0);
    for (std::size_t i : m.labeled_indices()) ++per_class[m.true_labels[i]];
    CHECK(per_class == std::vector<int>{4, 4});
    CHECK(m.features == full.features);
    CHECK(m.true_labels == full.true_labels);
    for (std::size_t i : m.unlabeled_indices()) CHECK(m.pseudo_labels.at(i, 0) == 0.5);
    CHECK_NOTHROW(m.validate());
    CHECK(mask_labels(full, 4, 7).labeled == m.labeled);
    CHECK_FALSE(mask_labels(full, 4, 8).labeled == m.labeled);
    CHECK(mask_labels(full, 500, 1).num_labeled() == 1000);
    CHECK(mask_labels(full, 0, 1).num_labeled() == 0);
    CHECK_THROWS_AS(mask_labels(full, 501, 1), ConfigError);
  }

  TEST_CASE("input jitter") {
    Tensor x({200, 50}, 1.0);
    Rng rng(3);
    CHECK(augment(x, AugmentSpec{0.05, false}, rng) == x);
    CHECK(augment(x, AugmentSpec{0.0, true}, rng) == x);
    Rng before(3);
    CHECK(rng.uniform() == before.uniform());  // inactive jitter consumed nothing

    const Tensor j = augment(x, AugmentSpec{0.05, true}, rng);
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < j.size(); ++i) abs_sum += std::abs(j[i] - 1.0);
    const double expected = 0.05 * std::sqrt(2.0 / std::acos(-1.0));
    CHECK(std::abs(abs_sum / j.size() - expected) < 0.05 * expected);
    CHECK_FALSE(augment(x, AugmentSpec{0.05, true}, rng) == j);
  }
}
