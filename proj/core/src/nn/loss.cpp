#include "fergan/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace fergan::nn {
namespace {

template <typename T>
T softplus(T x) {
  // log(1 + e^x) without overflow
  return x > T{0} ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax: expected [N, C] logits, got " + to_string(logits.shape()));
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = logits.data() + i * c;
    const T m = *std::max_element(row, row + c);
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) sum += std::exp(static_cast<double>(row[j] - m));
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = static_cast<T>(std::exp(static_cast<double>(row[j] - m)) / sum);
  }
  return out;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels) {
  const Tensor<T> probs = softmax(logits);
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) throw ShapeError("cross entropy: label count does not match batch size");
  LossResult<T> r{T{0}, probs};
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c) throw ShapeError("cross entropy: label out of range");
    const T* row = logits.data() + i * c;
    const T m = *std::max_element(row, row + c);
    double lse = 0.0;
    for (std::size_t j = 0; j < c; ++j) lse += std::exp(static_cast<double>(row[j] - m));
    total += std::log(lse) + m - row[y];
    r.grad[i * c + static_cast<std::size_t>(y)] -= T{1};
  }
  r.grad *= static_cast<T>(1.0 / static_cast<double>(n));
  r.value = static_cast<T>(total / static_cast<double>(n));
  return r;
}

template <typename T>
LossResult<T> mean_squared_to(const Tensor<T>& x, T target) {
  LossResult<T> r{T{0}, Tensor<T>(x.shape())};
  const double inv_n = 1.0 / static_cast<double>(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - target;
    total += d * d;
    r.grad[i] = static_cast<T>(2.0 * d * inv_n);
  }
  r.value = static_cast<T>(total * inv_n);
  return r;
}

template <typename T>
LossResult<T> logistic_to(const Tensor<T>& x, bool target_real) {
  LossResult<T> r{T{0}, Tensor<T>(x.shape())};
  const double inv_n = 1.0 / static_cast<double>(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (target_real) {
      total += softplus(-x[i]);
      r.grad[i] = static_cast<T>(-(1.0 - sigmoid(x[i])) * inv_n);
    } else {
      total += softplus(x[i]);
      r.grad[i] = static_cast<T>(sigmoid(x[i]) * inv_n);
    }
  }
  r.value = static_cast<T>(total * inv_n);
  return r;
}

template <typename T>
LossResult<T> mean_of(const Tensor<T>& x) {
  LossResult<T> r{T{0}, Tensor<T>(x.shape(), static_cast<T>(1.0 / static_cast<double>(x.size())))};
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += x[i];
  r.value = static_cast<T>(total / static_cast<double>(x.size()));
  return r;
}

template <typename T>
LossResult<T> mean_absolute_error(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("l1: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  LossResult<T> r{T{0}, Tensor<T>(a.shape())};
  const double inv_n = 1.0 / static_cast<double>(a.size());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    total += std::abs(d);
    r.grad[i] = static_cast<T>(d > 0 ? inv_n : (d < 0 ? -inv_n : 0.0));
  }
  r.value = static_cast<T>(total * inv_n);
  return r;
}

#define FERGAN_INSTANTIATE_LOSSES(T)                                                        \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                          \
  template LossResult<T> softmax_cross_entropy<T>(const Tensor<T>&, std::span<const int>); \
  template LossResult<T> mean_squared_to<T>(const Tensor<T>&, T);                           \
  template LossResult<T> logistic_to<T>(const Tensor<T>&, bool);                            \
  template LossResult<T> mean_of<T>(const Tensor<T>&);                                      \
  template LossResult<T> mean_absolute_error<T>(const Tensor<T>&, const Tensor<T>&);

FERGAN_INSTANTIATE_LOSSES(float)
FERGAN_INSTANTIATE_LOSSES(double)

#undef FERGAN_INSTANTIATE_LOSSES

}  // namespace fergan::nn
