#pragma once

#include <vector>

#include "fergan/nn/layers.hpp"

namespace fergan::nn {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment buffers follow the order of the
/// parameter list given at construction.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Param<T>*> params, AdamOptions options);

  void step();
  void zero_grad();
  long steps_taken() const noexcept { return t_; }
  const AdamOptions& options() const noexcept { return options_; }

 private:
  std::vector<Param<T>*> params_;
  AdamOptions options_;
  std::vector<std::vector<T>> m_, v_;
  long t_ = 0;
};

/// Plain gradient descent, mostly useful in tests.
template <typename T>
class Sgd {
 public:
  Sgd(std::vector<Param<T>*> params, double learning_rate) : params_(std::move(params)), lr_(learning_rate) {}
  void step();

 private:
  std::vector<Param<T>*> params_;
  double lr_;
};

extern template class Adam<float>;
extern template class Adam<double>;
extern template class Sgd<float>;
extern template class Sgd<double>;

}  // namespace fergan::nn
