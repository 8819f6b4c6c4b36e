#include "ttree/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ttree {

namespace {

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

void require_same_shape(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("tensor shape mismatch: " + a.shape_string() + " vs " +
                                b.shape_string());
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), values_(product(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != product(shape_)) {
    throw std::invalid_argument("tensor value count does not match shape " + shape_string());
  }
}

double Tensor::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double Tensor::min_value() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double Tensor::frobenius_norm() const {
  const double scale = max_abs();
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  double acc = 0.0;
  for (double v : values_) {
    const double r = v / scale;
    acc += r * r;
  }
  return scale * std::sqrt(acc);
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool Tensor::nonnegative() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other);
  std::transform(values_.begin(), values_.end(), other.values_.begin(), values_.begin(),
                 std::plus<>());
  return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
  require_same_shape(*this, other);
  std::transform(values_.begin(), values_.end(), other.values_.begin(), values_.begin(),
                 std::minus<>());
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
  os << ')';
  return os.str();
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }

double inner(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b);
  return std::inner_product(a.values().begin(), a.values().end(), b.values().begin(), 0.0);
}

Tensor move_axis(const Tensor& t, int axis, int to) {
  const int r = t.rank();
  std::vector<int> order;
  for (int a = 0; a < r; ++a)
    if (a != axis) order.push_back(a);
  order.insert(order.begin() + to, axis);
  std::vector<int> new_shape(r);
  for (int a = 0; a < r; ++a) new_shape[a] = t.dim(order[a]);
  Tensor out(new_shape);

  std::vector<std::size_t> stride(r, 1);
  for (int a = r - 2; a >= 0; --a) stride[a] = stride[a + 1] * t.dim(a + 1);
  std::vector<int> idx(r, 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t src = 0;
    for (int a = 0; a < r; ++a) src += idx[a] * stride[order[a]];
    out[flat] = t[src];
    for (int a = r - 1; a >= 0; --a) {
      if (++idx[a] < new_shape[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

std::vector<double> matricize(const Tensor& t, const std::vector<int>& row_axes, int& rows,
                              int& cols) {
  const int r = t.rank();
  std::vector<int> order = row_axes;
  for (int a = 0; a < r; ++a)
    if (std::find(row_axes.begin(), row_axes.end(), a) == row_axes.end()) order.push_back(a);
  rows = 1;
  for (int a : row_axes) rows *= t.dim(a);
  cols = static_cast<int>(t.size()) / rows;

  std::vector<std::size_t> stride(r, 1);
  for (int a = r - 2; a >= 0; --a) stride[a] = stride[a + 1] * t.dim(a + 1);
  std::vector<double> out(t.size());
  std::vector<int> idx(r, 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t src = 0;
    for (int a = 0; a < r; ++a) src += idx[a] * stride[order[a]];
    out[flat] = t[src];
    for (int a = r - 1; a >= 0; --a) {
      if (++idx[a] < t.dim(order[a])) break;
      idx[a] = 0;
    }
  }
  return out;
}

}  // namespace ttree
