#pragma once

#include <span>
#include <vector>

#include "pseudolab/tensor.hpp"

namespace pseudolab {

/// SGD with classical momentum and L2 weight decay folded into the gradient:
///
///   v <- momentum * v + grad + weight_decay * param
///   param <- param - learning_rate * v
struct SgdState {
  std::vector<Tensor> velocity;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double learning_rate = 0.1;
};

/// Zero velocities shaped like `params`.
SgdState make_sgd_state(std::span<Tensor* const> params, double learning_rate,
                        double momentum = 0.9, double weight_decay = 1e-4);

/// Applies one update and zeroes the gradients. Throws ContractError if any
/// parameter has no gradient buffer or the velocity shapes do not match.
void sgd_step(std::span<Tensor* const> params, SgdState& state);

}  // namespace pseudolab
