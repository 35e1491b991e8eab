#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pseudolab/autodiff.hpp"
#include "pseudolab/rng.hpp"
#include "pseudolab/tensor.hpp"

namespace testutil {

using pseudolab::Rng;
using pseudolab::Shape;
using pseudolab::Tensor;

/// Central differences of f() with respect to every entry of x.
inline std::vector<double> numeric_grad(const std::function<double()>& f, std::span<double> x,
                                        double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f();
    x[i] = saved - h;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a|| + ||b||, 1e-6)
inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nb), 1e-6);
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = lo + (hi - lo) * rng.uniform();
  return t;
}

/// Rows of softmax(N(0, scale^2)) logits.
inline Tensor random_probs(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.5) {
  Tensor z({rows, cols});
  for (double& v : z.values()) v = scale * rng.normal();
  return pseudolab::softmax_rows(z);
}

using Builder =
    std::function<pseudolab::Var(pseudolab::Tape&, const std::vector<pseudolab::Var>&)>;

/// Worst relative error between backward() and central differences for the
/// scalar sum(build(inputs) * w), w a random weighting of the output.
inline double gradcheck(const Builder& build, std::vector<Tensor> inputs, Rng& rng) {
  using namespace pseudolab;
  Tape tape;
  std::vector<Var> vars;
  for (Tensor& t : inputs) vars.push_back(tape.parameter(t));
  Var out = build(tape, vars);
  const Tensor w = random_tensor(out.shape(), rng);
  tape.backward(sum(multiply(out, tape.constant(w))));

  auto eval = [&] {
    Tape t2;
    std::vector<Var> cs;
    for (const Tensor& x : inputs) {
      Tensor c = x;
      c.drop_grad();
      cs.push_back(t2.constant(std::move(c)));
    }
    const Tensor o = build(t2, cs).value();
    double s = 0.0;
    for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * w[i];
    return s;
  };
  double worst = 0.0;
  for (Tensor& t : inputs) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    const auto numeric = numeric_grad(eval, t.values());
    worst = std::max(worst, rel_error(analytic, numeric));
  }
  return worst;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pseudolab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testutil
