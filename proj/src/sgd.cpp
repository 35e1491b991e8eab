#include "pseudolab/sgd.hpp"

#include "pseudolab/errors.hpp"

namespace pseudolab {

SgdState make_sgd_state(std::span<Tensor* const> params, double learning_rate, double momentum,
                        double weight_decay) {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  SgdState state;
  state.momentum = momentum;
  state.weight_decay = weight_decay;
  state.learning_rate = learning_rate;
  state.velocity.reserve(params.size());
  for (const Tensor* p : params) state.velocity.emplace_back(p->shape());
  return state;
}

void sgd_step(std::span<Tensor* const> params, SgdState& state) {
  if (state.velocity.size() != params.size()) {
    throw ContractError("optimizer holds " + std::to_string(state.velocity.size()) +
                        " velocity buffers for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->has_grad()) {
      throw ContractError("parameter " + std::to_string(i) + " has no gradient");
    }
    if (state.velocity[i].shape() != params[i]->shape()) {
      throw ContractError("velocity shape " + to_string(state.velocity[i].shape()) +
                          " does not match parameter shape " + to_string(params[i]->shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    auto v = state.velocity[i].values();
    auto g = p.grad();
    auto w = p.values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = state.momentum * v[j] + g[j] + state.weight_decay * w[j];
      w[j] -= state.learning_rate * v[j];
    }
    p.zero_grad();
  }
}

}  // namespace pseudolab
