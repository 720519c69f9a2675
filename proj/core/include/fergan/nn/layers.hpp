#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fergan/common/random.hpp"
#include "fergan/nn/tensor.hpp"

namespace fergan::nn {

enum class Mode { kInference, kTraining };

struct ForwardContext {
  Mode mode = Mode::kInference;
  Rng* rng = nullptr;  // required by stochastic layers in training mode
};

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

/// What a layer keeps from its forward pass for the matching backward pass.
/// One state per call, so a network may be applied several times before any
/// backward pass (the translator's cycle does exactly that).
template <typename T>
struct LayerState {
  Tensor<T> input;
  Tensor<T> output;
  Tensor<T> mask;
  std::vector<std::uint32_t> argmax;
  std::vector<LayerState<T>> children;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  /// Hyperparameters, enough to rebuild the layer via make_layer().
  virtual nlohmann::json config() const = 0;
  /// Per-sample shape (without the batch axis) produced from `in`.
  virtual Shape output_shape(const Shape& in) const = 0;

  virtual Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const = 0;
  /// Returns d(loss)/d(input) and accumulates parameter gradients.
  virtual Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) = 0;

  virtual std::vector<Param<T>*> params() { return {}; }
  virtual std::vector<const Param<T>*> params() const { return {}; }
  virtual void reset_parameters(Rng& /*rng*/) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
};

/// 2-D convolution over NCHW input with square kernel, zero padding.
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride = 1,
         std::size_t padding = 0);

  std::string kind() const override { return "conv2d"; }
  nlohmann::json config() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
  std::vector<const Param<T>*> params() const override { return {&weight_, &bias_}; }
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

  std::size_t in_channels() const { return in_channels_; }
  std::size_t out_channels() const { return out_channels_; }
  std::size_t kernel() const { return kernel_; }

 private:
  std::size_t in_channels_, out_channels_, kernel_, stride_, padding_;
  Param<T> weight_;  // [out, in, k, k]
  Param<T> bias_;    // [out]
};

/// Fully connected layer over [N, features] input.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in_features, std::size_t out_features);

  std::string kind() const override { return "dense"; }
  nlohmann::json config() const override;
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }
  std::vector<const Param<T>*> params() const override { return {&weight_, &bias_}; }
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

 private:
  std::size_t in_features_, out_features_;
  Param<T> weight_;  // [out, in]
  Param<T> bias_;    // [out]
};

/// Non-overlapping max pooling (window == stride).
template <typename T>
class MaxPool2d final : public Layer<T> {
 public:
  explicit MaxPool2d(std::size_t window) : window_(window) {}
  std::string kind() const override { return "maxpool2d"; }
  nlohmann::json config() const override { return {{"type", kind()}, {"window", window_}}; }
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool2d>(*this); }

 private:
  std::size_t window_;
};

/// Inverted dropout; identity at inference.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  explicit Dropout(double rate);
  std::string kind() const override { return "dropout"; }
  nlohmann::json config() const override { return {{"type", kind()}, {"rate", rate_}}; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }
  double rate() const { return rate_; }

 private:
  double rate_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  std::string kind() const override { return "relu"; }
  nlohmann::json config() const override { return {{"type", kind()}}; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReLU>(*this); }
};

template <typename T>
class LeakyReLU final : public Layer<T> {
 public:
  explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
  std::string kind() const override { return "leaky_relu"; }
  nlohmann::json config() const override { return {{"type", kind()}, {"slope", slope_}}; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<LeakyReLU>(*this); }

 private:
  double slope_;
};

template <typename T>
class Tanh final : public Layer<T> {
 public:
  std::string kind() const override { return "tanh"; }
  nlohmann::json config() const override { return {{"type", kind()}}; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Tanh>(*this); }
};

/// [N, ...] -> [N, prod(...)].
template <typename T>
class Flatten final : public Layer<T> {
 public:
  std::string kind() const override { return "flatten"; }
  nlohmann::json config() const override { return {{"type", kind()}}; }
  Shape output_shape(const Shape& in) const override { return {numel(in)}; }
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Flatten>(*this); }
};

/// [N, F] -> [N, C, H, W] with F == C*H*W.
template <typename T>
class Unflatten final : public Layer<T> {
 public:
  explicit Unflatten(Shape sample_shape) : sample_shape_(std::move(sample_shape)) {}
  std::string kind() const override { return "unflatten"; }
  nlohmann::json config() const override { return {{"type", kind()}, {"shape", sample_shape_}}; }
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Unflatten>(*this); }

 private:
  Shape sample_shape_;
};

/// Nearest-neighbour upsampling by an integer factor.
template <typename T>
class Upsample2d final : public Layer<T> {
 public:
  explicit Upsample2d(std::size_t factor) : factor_(factor) {}
  std::string kind() const override { return "upsample2d"; }
  nlohmann::json config() const override { return {{"type", kind()}, {"factor", factor_}}; }
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Upsample2d>(*this); }

 private:
  std::size_t factor_;
};

/// Per-sample, per-channel normalisation with learned affine (instance norm).
template <typename T>
class InstanceNorm final : public Layer<T> {
 public:
  explicit InstanceNorm(std::size_t channels, double eps = 1e-5);
  std::string kind() const override { return "instance_norm"; }
  nlohmann::json config() const override { return {{"type", kind()}, {"channels", channels_}, {"eps", eps_}}; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::vector<Param<T>*> params() override { return {&gamma_, &beta_}; }
  std::vector<const Param<T>*> params() const override { return {&gamma_, &beta_}; }
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<InstanceNorm>(*this); }

 private:
  std::size_t channels_;
  double eps_;
  Param<T> gamma_;
  Param<T> beta_;
};

template <typename T>
class Sequential;

/// y = x + f(x), with f a nested sequential block of unchanged shape.
template <typename T>
class Residual final : public Layer<T> {
 public:
  explicit Residual(Sequential<T> body);
  Residual(const Residual& other);
  Residual& operator=(const Residual&) = delete;
  ~Residual() override;

  std::string kind() const override { return "residual"; }
  nlohmann::json config() const override;
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const override;
  Tensor<T> backward(const Tensor<T>& grad_out, const LayerState<T>& state) override;
  std::vector<Param<T>*> params() override;
  std::vector<const Param<T>*> params() const override;
  void reset_parameters(Rng& rng) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Residual>(*this); }

 private:
  std::unique_ptr<Sequential<T>> body_;
};

/// Rebuilds a layer from its config() document.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const nlohmann::json& config);

extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class Dense<float>;
extern template class Dense<double>;
extern template class MaxPool2d<float>;
extern template class MaxPool2d<double>;
extern template class Dropout<float>;
extern template class Dropout<double>;
extern template class ReLU<float>;
extern template class ReLU<double>;
extern template class LeakyReLU<float>;
extern template class LeakyReLU<double>;
extern template class Tanh<float>;
extern template class Tanh<double>;
extern template class Flatten<float>;
extern template class Flatten<double>;
extern template class Unflatten<float>;
extern template class Unflatten<double>;
extern template class Upsample2d<float>;
extern template class Upsample2d<double>;
extern template class InstanceNorm<float>;
extern template class InstanceNorm<double>;
extern template class Residual<float>;
extern template class Residual<double>;

}  // namespace fergan::nn
