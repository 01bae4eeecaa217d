#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace natsr {

using Shape = std::vector<int>;

std::string to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major array of doubles. Rank-4 tensors use (batch, height, width,
// channels) order; convolution weights use (kh, kw, cin, cout).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }
  static Tensor scalar(double v) { return Tensor({1}, v); }

  const Shape& shape() const noexcept { return shape_; }
  int rank() const noexcept { return static_cast<int>(shape_.size()); }
  int dim(int i) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  double* ptr() noexcept { return data_.data(); }
  const double* ptr() const noexcept { return data_.data(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-4 accessors, (n, y, x, c).
  double& at(int n, int y, int x, int c) {
    return data_[((static_cast<std::size_t>(n) * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
  }
  double at(int n, int y, int x, int c) const {
    return data_[((static_cast<std::size_t>(n) * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
  }

  double item() const;
  Tensor reshaped(Shape shape) const;
  void fill(double v);

  // Contract checker: every element finite.
  bool all_finite() const noexcept;

  // Bitwise equality of shape and payload.
  bool identical(const Tensor& other) const noexcept;

 private:
  Shape shape_;
  std::vector<double> data_;
};

double max_abs_diff(const Tensor& a, const Tensor& b);

// Throws ShapeError unless `t` has rank 4.
void require_rank4(const Tensor& t, const char* what);

}  // namespace natsr
