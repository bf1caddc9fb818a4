#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace lastrank {

// Dense row-major tensor of doubles. Rank 1 and rank 2 are the only shapes
// the networks use; higher ranks are storable but have no arithmetic.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  // Copy of rows [first, last) of a matrix.
  Tensor row_slice(std::size_t first, std::size_t last) const;

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  // Bitwise equality of shape and every stored value.
  bool identical(const Tensor& other) const noexcept;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// out[b,o] = sum_i input[b,i] * weight[i,o] + bias[o]
Tensor affine_forward(const Tensor& input, const Tensor& weight, const Tensor& bias);

struct AffineGrads {
  Tensor input;
  Tensor weight;
  Tensor bias;
};

// Reverse-mode partials of affine_forward given the upstream gradient and
// the forward inputs.
AffineGrads affine_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight);

Tensor tanh_forward(const Tensor& x);
// grad_out * (1 - y^2), where y is the tanh output.
Tensor tanh_backward(const Tensor& grad_out, const Tensor& output);

double sigmoid(double x);

// Softmax over entries where mask is true; masked-out entries are exactly 0.
std::vector<double> masked_softmax(std::span<const double> scores, const std::vector<bool>& mask);

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

// y += x * W for a row vector x (length W.rows()) and y of length W.cols().
void accumulate_row_times(std::span<const double> x, const Tensor& weight, std::span<double> y);
// y += W * x for x of length W.cols() and y of length W.rows().
void accumulate_times_col(const Tensor& weight, std::span<const double> x, std::span<double> y);
// W += a outer b
void accumulate_outer(std::span<const double> a, std::span<const double> b, Tensor& weight);

}  // namespace lastrank
