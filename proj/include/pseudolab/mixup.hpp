#pragma once

#include <cstddef>
#include <vector>

#include "pseudolab/rng.hpp"
#include "pseudolab/tensor.hpp"

namespace pseudolab {

/// One mixing coefficient for the whole batch and the partner of every row.
struct MixupDraw {
  double delta = 1.0;
  std::vector<std::size_t> permutation;

  static MixupDraw identity(std::size_t batch_size, double delta = 1.0);
};

/// delta ~ Beta(alpha, alpha) and a uniformly random pairing permutation.
/// Throws ConfigError unless alpha > 0.
MixupDraw sample_mixup(double alpha, std::size_t batch_size, Rng& rng);

struct MixedBatch {
  Tensor x;    // delta * x + (1 - delta) * x[perm]
  Tensor y_p;  // labels of the rows themselves
  Tensor y_q;  // labels of the partners
  double delta = 1.0;
};

/// Mixes inputs only; the two label sets are returned unmixed so the loss can
/// weight them separately. Throws DimensionError when the permutation does
/// not fit the batch.
MixedBatch mix_batch(const Tensor& x, const Tensor& y, const MixupDraw& draw);

}  // namespace pseudolab
