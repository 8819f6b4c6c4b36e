#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ttree {

/// Dense row-major real tensor. The tree uses rank 3 (left, right, up);
/// fused bonds use rank 4.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int axis) const { return shape_[axis]; }
  std::size_t size() const { return values_.size(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double& operator()(int i, int j, int k) {
    return values_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(int i, int j, int k) const {
    return values_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  double& operator()(int i, int j, int k, int l) {
    return values_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  double operator()(int i, int j, int k, int l) const {
    return values_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  double sum() const;
  double max_abs() const;
  double min_value() const;
  /// Overflow-safe Frobenius norm.
  double frobenius_norm() const;
  bool all_finite() const;
  bool nonnegative() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double s);

  std::string shape_string() const;

 private:
  std::vector<int> shape_;
  std::vector<double> values_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);

/// Sum of the elementwise product.
double inner(const Tensor& a, const Tensor& b);

/// Moves `axis` to position `to`, keeping the relative order of the others.
Tensor move_axis(const Tensor& t, int axis, int to);

/// Reshapes a row-major tensor into a matrix whose rows run over `row_axes`
/// (row-major in the given order) and columns over the remaining axes
/// (ascending axis order).
std::vector<double> matricize(const Tensor& t, const std::vector<int>& row_axes, int& rows,
                              int& cols);

}  // namespace ttree
