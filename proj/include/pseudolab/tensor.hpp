#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pseudolab {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// The gradient buffer is empty until the tensor takes part in
/// differentiation (see Tape::parameter); afterwards it always has the same
/// length as the values.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value) { return Tensor({1}, {value}); }
  /// Builds a rows x cols matrix from nested rows. Rows must be equal length.
  static Tensor matrix(const std::vector<std::vector<double>>& rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool is_scalar() const noexcept { return values_.size() == 1; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;
  double item() const;

  bool has_grad() const noexcept { return !grad_.empty(); }
  std::span<double> grad() noexcept { return grad_; }
  std::span<const double> grad() const noexcept { return grad_; }
  /// Allocates a zeroed gradient buffer if none exists.
  void ensure_grad();
  void zero_grad();
  void drop_grad() { grad_.clear(); }

  bool all_finite() const;

  /// Compares shape and values only.
  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  Shape shape_;
  std::vector<double> values_;
  std::vector<double> grad_;
};

/// Copies the listed rows of a matrix into a new matrix.
Tensor gather_rows(const Tensor& m, std::span<const std::size_t> rows);

}  // namespace pseudolab
