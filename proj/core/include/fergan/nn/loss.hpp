#pragma once

#include <cstddef>
#include <span>

#include "fergan/nn/tensor.hpp"

namespace fergan::nn {

template <typename T>
struct LossResult {
  T value{};
  Tensor<T> grad;  // d(value)/d(input), same shape as the input
};

/// Row-wise softmax of [N, C] logits.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

/// Mean categorical cross-entropy of softmax(logits) against integer labels.
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

/// Mean of (x - target)^2.
template <typename T>
LossResult<T> mean_squared_to(const Tensor<T>& x, T target);

/// Mean of softplus(-x) (target 1) or softplus(x) (target 0): logistic loss on logits.
template <typename T>
LossResult<T> logistic_to(const Tensor<T>& x, bool target_real);

/// Mean of x.
template <typename T>
LossResult<T> mean_of(const Tensor<T>& x);

/// Mean absolute difference |a - b|; gradient is taken with respect to `a`.
template <typename T>
LossResult<T> mean_absolute_error(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace fergan::nn
