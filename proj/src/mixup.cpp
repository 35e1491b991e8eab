#include "pseudolab/mixup.hpp"

#include <numeric>

#include "pseudolab/errors.hpp"

namespace pseudolab {

MixupDraw MixupDraw::identity(std::size_t batch_size, double delta) {
  MixupDraw d;
  d.delta = delta;
  d.permutation.resize(batch_size);
  std::iota(d.permutation.begin(), d.permutation.end(), std::size_t{0});
  return d;
}

MixupDraw sample_mixup(double alpha, std::size_t batch_size, Rng& rng) {
  if (!(alpha > 0.0)) throw ConfigError("mixup alpha must be positive");
  MixupDraw d;
  d.delta = rng.beta(alpha, alpha);
  d.permutation = rng.permutation(batch_size);
  return d;
}

MixedBatch mix_batch(const Tensor& x, const Tensor& y, const MixupDraw& draw) {
  const std::size_t b = x.rows();
  if (y.rows() != b || draw.permutation.size() != b) {
    throw DimensionError("mix_batch: batch of " + std::to_string(b) + " rows, labels " +
                         to_string(y.shape()) + ", permutation of " +
                         std::to_string(draw.permutation.size()));
  }
  std::vector<bool> seen(b, false);
  for (std::size_t p : draw.permutation) {
    if (p >= b || seen[p]) throw DimensionError("mix_batch: pairing is not a permutation");
    seen[p] = true;
  }
  const double delta = draw.delta;
  MixedBatch out;
  out.delta = delta;
  out.y_p = y;
  out.y_p.drop_grad();
  out.y_q = gather_rows(y, draw.permutation);
  const Tensor partners = gather_rows(x, draw.permutation);
  out.x = Tensor(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out.x[i] = delta * x[i] + (1.0 - delta) * partners[i];
  return out;
}

}  // namespace pseudolab
