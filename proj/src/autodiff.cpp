#include "pseudolab/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "pseudolab/errors.hpp"

namespace pseudolab {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(*this);
}

std::span<const double> Var::grad() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->grad(*this);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(*this); }

Var Tape::constant(Tensor value) {
  storage_.push_back(std::move(value));
  Node n;
  n.tensor = &storage_.back();
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor& param) {
  param.ensure_grad();
  Node n;
  n.tensor = &param;
  n.requires_grad = true;
  n.external = true;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> operands, BackwardRule rule) {
  bool needs = false;
  for (const Var& op : operands) {
    if (op.tape_ != this) throw ContractError("operand recorded on a different tape");
    needs = needs || node(op).requires_grad;
  }
  storage_.push_back(std::move(value));
  Node n;
  n.tensor = &storage_.back();
  n.requires_grad = needs;
  if (needs) n.rule = std::move(rule);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractError("loss was not recorded on this tape");
  const Tensor& out = value(loss);
  if (!out.is_scalar()) {
    throw ContractError("backward() needs a scalar loss, got shape " + to_string(out.shape()));
  }
  for (std::size_t i = 0; i <= loss.id_; ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad && !n.external) n.grad.assign(n.tensor->size(), 0.0);
  }
  if (!node(loss).requires_grad) return;
  grad_of(loss)[0] += 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.rule) continue;
    n.rule(*this, *n.tensor, n.grad);
  }
}

Tape::Node& Tape::node(Var v) {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw ContractError("Var not on this tape");
  return nodes_[v.id_];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) throw ContractError("Var not on this tape");
  return nodes_[v.id_];
}

const Tensor& Tape::value(Var v) const { return *node(v).tensor; }

std::span<double> Tape::grad_of(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return {};
  if (n.external) return n.tensor->grad();
  return n.grad;
}

std::span<const double> Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!n.requires_grad) return {};
  if (n.external) return n.tensor->grad();
  return n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

namespace {

Tape& common_tape(Var a, Var b) {
  if (!a.tape() || a.tape() != b.tape()) throw ContractError("operands live on different tapes");
  return *a.tape();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

void softmax_row(std::span<const double> in, std::span<double> out) {
  const double mx = *std::max_element(in.begin(), in.end());
  double total = 0.0;
  for (std::size_t j = 0; j < in.size(); ++j) {
    out[j] = std::exp(in[j] - mx);
    total += out[j];
  }
  for (double& v : out) v /= total;
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    throw DimensionError("matmul: cannot multiply " + to_string(av.shape()) + " by " +
                         to_string(bv.shape()));
  }
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
    }
  }
  return tape.record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, const Tensor&, std::span<const double> g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (auto ga = t.grad_of(a); !ga.empty()) {
      // ga += g . b^T
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (auto gb = t.grad_of(b); !gb.empty()) {
      // gb += a^T . g
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
    }
  });
}

Var add(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape("add", av, bv);
  Tensor out = av;
  out.drop_grad();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, std::span<const double> g) {
    for (Var v : {a, b}) {
      if (auto gv = t.grad_of(v); !gv.empty())
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var add_row(Var m, Var row) {
  Tape& tape = common_tape(m, row);
  const Tensor& mv = m.value();
  const Tensor& rv = row.value();
  if (mv.rank() != 2 || rv.size() != mv.cols()) {
    throw DimensionError("add_row: cannot broadcast " + to_string(rv.shape()) + " over rows of " +
                         to_string(mv.shape()));
  }
  const std::size_t rows = mv.rows(), cols = mv.cols();
  Tensor out = mv;
  out.drop_grad();
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] += rv[j];
  return tape.record(std::move(out), {m, row}, [m, row, rows, cols](Tape& t, const Tensor&, std::span<const double> g) {
    if (auto gm = t.grad_of(m); !gm.empty())
      for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
    if (auto gr = t.grad_of(row); !gr.empty())
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) gr[j] += g[i * cols + j];
  });
}

Var multiply_scalar(Var a, double s) {
  Tape& tape = *a.tape();
  Tensor out = a.value();
  out.drop_grad();
  for (double& v : out.values()) v *= s;
  return tape.record(std::move(out), {a}, [a, s](Tape& t, const Tensor&, std::span<const double> g) {
    auto ga = t.grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var multiply(Var a, Var b) {
  Tape& tape = common_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape("multiply", av, bv);
  Tensor out = av;
  out.drop_grad();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, const Tensor&, std::span<const double> g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (auto ga = t.grad_of(a); !ga.empty())
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    if (auto gb = t.grad_of(b); !gb.empty())
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
  });
}

Var relu(Var x) {
  Tape& tape = *x.tape();
  Tensor out = x.value();
  out.drop_grad();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return tape.record(std::move(out), {x}, [x](Tape& t, const Tensor&, std::span<const double> g) {
    const Tensor& xv = t.value(x);
    auto gx = t.grad_of(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0.0) gx[i] += g[i];
  });
}

Tensor softmax_rows(const Tensor& logits) {
  if (logits.rank() != 2 || logits.cols() < 2) {
    throw DimensionError("softmax_rows needs a [B x C] matrix with C >= 2, got " +
                         to_string(logits.shape()));
  }
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < logits.rows(); ++r) softmax_row(logits.row(r), out.row(r));
  return out;
}

Var softmax_rows(Var logits) {
  Tape& tape = *logits.tape();
  Tensor out = softmax_rows(logits.value());
  const std::size_t rows = out.rows(), cols = out.cols();
  return tape.record(std::move(out), {logits},
                     [logits, rows, cols](Tape& t, const Tensor& p, std::span<const double> g) {
                       auto gx = t.grad_of(logits);
                       for (std::size_t r = 0; r < rows; ++r) {
                         double dot = 0.0;
                         for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * p[r * cols + c];
                         for (std::size_t c = 0; c < cols; ++c)
                           gx[r * cols + c] += p[r * cols + c] * (g[r * cols + c] - dot);
                       }
                     });
}

Var sum(Var x) {
  Tape& tape = *x.tape();
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return tape.record(Tensor::scalar(total), {x}, [x](Tape& t, const Tensor&, std::span<const double> g) {
    auto gx = t.grad_of(x);
    for (double& v : gx) v += g[0];
  });
}

}  // namespace pseudolab
