#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "pseudolab/tensor.hpp"

namespace pseudolab {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  /// Gradient of the last backward pass; empty for constants.
  std::span<const double> grad() const;
  bool requires_grad() const;
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records operations in execution order; backward() replays their rules in
/// reverse. Nodes are appended only, so every operand of node i has an index
/// below i.
///
/// Parameters registered with parameter() are referenced, not copied: their
/// gradients land directly in the caller's Tensor::grad buffer and accumulate
/// across backward passes until zeroed.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is accumulated in `param.grad()`. `param` must
  /// outlive the tape.
  Var parameter(Tensor& param);

  /// Appends a node. `rule` receives the node's own output and upstream
  /// gradient and must accumulate into operand gradients via Tape::grad_of.
  using BackwardRule =
      std::function<void(Tape&, const Tensor& output, std::span<const double> upstream)>;
  Var record(Tensor value, std::vector<Var> operands, BackwardRule rule);

  /// Seeds d(loss)/d(loss) = 1 and propagates to every node that requires
  /// gradients. `loss` must be a one-element tensor recorded on this tape.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  /// Mutable gradient buffer of an operand; empty if it does not require
  /// gradients. Only valid inside backward().
  std::span<double> grad_of(Var v);
  std::span<const double> grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor* tensor = nullptr;
    std::vector<double> grad;  // intermediate nodes only
    bool requires_grad = false;
    bool external = false;
    BackwardRule rule;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::deque<Tensor> storage_;
  std::vector<Node> nodes_;
};

// Differentiable operations. All operands must live on the same tape.

/// [m x k] . [k x n] -> [m x n]
Var matmul(Var a, Var b);
/// Elementwise sum of equal shapes.
Var add(Var a, Var b);
/// Adds a length-n row vector to every row of an [m x n] matrix.
Var add_row(Var m, Var row);
Var multiply_scalar(Var a, double s);
/// Elementwise (Hadamard) product of equal shapes.
Var multiply(Var a, Var b);
/// max(x, 0); the subgradient at exactly 0 is 0.
Var relu(Var x);
/// Row-wise softmax of a [B x C] matrix, stabilized by the row maximum.
Var softmax_rows(Var logits);
/// Sum of all entries -> scalar.
Var sum(Var x);

/// Softmax on a plain matrix. C must be at least 2.
Tensor softmax_rows(const Tensor& logits);

}  // namespace pseudolab
