#include "lastrank/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <numeric>

#include "lastrank/error.hpp"

namespace lastrank {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Tensor& t) {
  std::string s = "[";
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (i) s += ",";
    s += std::to_string(t.shape()[i]);
  }
  return s + "]";
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(product(shape_) == data_.size(), "tensor data length does not match shape");
}

Tensor Tensor::vector(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    require(row.size() == c, "ragged matrix literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(values));
}

std::size_t Tensor::rows() const {
  require(rank() == 2, "rows() on a tensor of rank " + std::to_string(rank()));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  require(rank() == 2, "cols() on a tensor of rank " + std::to_string(rank()));
  return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
  const std::size_t c = cols();
  return std::span<double>(data_).subspan(r * c, c);
}

std::span<const double> Tensor::row(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const double>(data_).subspan(r * c, c);
}

Tensor Tensor::row_slice(std::size_t first, std::size_t last) const {
  require(first <= last && last <= rows(), "row_slice out of range");
  const std::size_t c = cols();
  return Tensor({last - first, c},
                std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(first * c),
                                    data_.begin() + static_cast<std::ptrdiff_t>(last * c)));
}

bool Tensor::identical(const Tensor& other) const noexcept {
  return shape_ == other.shape_ &&
         (data_.empty() ||
          std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0);
}

Tensor affine_forward(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require(input.rank() == 2 && weight.rank() == 2 && bias.rank() == 1,
          "affine_forward expects input[B,I], weight[I,O], bias[O]");
  if (input.cols() != weight.rows() || weight.cols() != bias.size()) {
    throw ContractViolation("affine_forward shape mismatch: input " + shape_string(input) +
                            ", weight " + shape_string(weight) + ", bias " +
                            shape_string(bias));
  }
  const std::size_t batch = input.rows();
  const std::size_t out_dim = weight.cols();
  Tensor out({batch, out_dim});
  for (std::size_t b = 0; b < batch; ++b) {
    auto y = out.row(b);
    std::copy(bias.data().begin(), bias.data().end(), y.begin());
    accumulate_row_times(input.row(b), weight, y);
  }
  return out;
}

AffineGrads affine_backward(const Tensor& grad_out, const Tensor& input, const Tensor& weight) {
  require(grad_out.rank() == 2 && input.rank() == 2 && weight.rank() == 2,
          "affine_backward expects rank-2 tensors");
  if (grad_out.rows() != input.rows() || input.cols() != weight.rows() ||
      grad_out.cols() != weight.cols()) {
    throw ContractViolation("affine_backward shape mismatch: grad_out " +
                            shape_string(grad_out) + ", input " + shape_string(input) +
                            ", weight " + shape_string(weight));
  }
  AffineGrads g{Tensor(input.shape()), Tensor(weight.shape()), Tensor({weight.cols()})};
  for (std::size_t b = 0; b < input.rows(); ++b) {
    const auto go = grad_out.row(b);
    accumulate_times_col(weight, go, g.input.row(b));
    accumulate_outer(input.row(b), go, g.weight);
    for (std::size_t o = 0; o < go.size(); ++o) g.bias[o] += go[o];
  }
  return g;
}

Tensor tanh_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = std::tanh(v);
  return y;
}

Tensor tanh_backward(const Tensor& grad_out, const Tensor& output) {
  require(grad_out.same_shape(output), "tanh_backward shape mismatch");
  Tensor g = grad_out;
  auto gd = g.data();
  const auto yd = output.data();
  for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= 1.0 - yd[i] * yd[i];
  return g;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> masked_softmax(std::span<const double> scores, const std::vector<bool>& mask) {
  require(scores.size() == mask.size(), "masked_softmax: scores and mask differ in length");
  double max_score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask[i]) {
      max_score = std::max(max_score, scores[i]);
      any = true;
    }
  }
  require(any, "masked_softmax: mask has no true entry");
  std::vector<double> out(scores.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask[i]) {
      out[i] = std::exp(scores[i] - max_score);
      total += out[i];
    }
  }
  for (double& v : out) v /= total;
  return out;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void accumulate_row_times(std::span<const double> x, const Tensor& weight, std::span<double> y) {
  const std::size_t in = weight.rows();
  const std::size_t out = weight.cols();
  require(x.size() == in && y.size() == out, "accumulate_row_times shape mismatch");
  const auto w = weight.data();
  for (std::size_t i = 0; i < in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wr = w.data() + i * out;
    for (std::size_t o = 0; o < out; ++o) y[o] += xi * wr[o];
  }
}

void accumulate_times_col(const Tensor& weight, std::span<const double> x, std::span<double> y) {
  const std::size_t rows = weight.rows();
  const std::size_t cols = weight.cols();
  require(x.size() == cols && y.size() == rows, "accumulate_times_col shape mismatch");
  const auto w = weight.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = w.data() + r * cols;
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += wr[c] * x[c];
    y[r] += s;
  }
}

void accumulate_outer(std::span<const double> a, std::span<const double> b, Tensor& weight) {
  const std::size_t rows = weight.rows();
  const std::size_t cols = weight.cols();
  require(a.size() == rows && b.size() == cols, "accumulate_outer shape mismatch");
  auto w = weight.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* wr = w.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) wr[c] += ar * b[c];
  }
}

}  // namespace lastrank
