#include "fergan/nn/optim.hpp"

#include <cmath>

namespace fergan::nn {

template <typename T>
Adam<T>::Adam(std::vector<Param<T>*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const auto* p : params_) {
    m_.emplace_back(p->value.size(), T{0});
    v_.emplace_back(p->value.size(), T{0});
  }
}

template <typename T>
void Adam<T>::step() {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step_size = options_.learning_rate / correction1;
  const double sqrt_c2 = std::sqrt(correction2);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& value = params_[k]->value;
    const auto& grad = params_[k]->grad;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = static_cast<T>(b1 * m[i] + (1.0 - b1) * g);
      v[i] = static_cast<T>(b2 * v[i] + (1.0 - b2) * g * g);
      const double denom = std::sqrt(static_cast<double>(v[i])) / sqrt_c2 + options_.epsilon;
      value[i] = static_cast<T>(value[i] - step_size * m[i] / denom);
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto* p : params_) p->grad.fill(T{0});
}

template <typename T>
void Sgd<T>::step() {
  for (auto* p : params_) {
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= static_cast<T>(lr_ * p->grad[i]);
  }
}

template class Adam<float>;
template class Adam<double>;
template class Sgd<float>;
template class Sgd<double>;

}  // namespace fergan::nn
