#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fergan/nn/layers.hpp"

namespace fergan::nn {

template <typename T>
using Trace = std::vector<LayerState<T>>;

/// Ordered stack of layers with value semantics (copies are deep).
template <typename T>
class Sequential {
 public:
  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;
  ~Sequential() = default;

  Sequential& add(std::unique_ptr<Layer<T>> layer);

  template <template <typename> class L, typename... Args>
  Sequential& emplace(Args&&... args) {
    return add(std::make_unique<L<T>>(std::forward<Args>(args)...));
  }

  /// With a non-null trace, records what backward() needs.
  Tensor<T> forward(const Tensor<T>& x, Trace<T>* trace, const ForwardContext& ctx) const;
  Tensor<T> infer(const Tensor<T>& x) const { return forward(x, nullptr, {}); }
  Tensor<T> backward(const Tensor<T>& grad_out, const Trace<T>& trace);

  std::vector<Param<T>*> params();
  std::vector<const Param<T>*> params() const;
  void zero_grad();
  void reset_parameters(Rng& rng);
  std::size_t parameter_count() const;

  std::size_t size() const noexcept { return layers_.size(); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

  /// Per-sample output shape after each layer.
  std::vector<Shape> layer_shapes(const Shape& input) const;
  Shape output_shape(const Shape& input) const;

  nlohmann::json describe() const;
  static Sequential from_description(const nlohmann::json& description);

  /// Parameters keyed "<layer index>.<param name>", in a stable order.
  std::vector<std::pair<std::string, const Tensor<T>*>> named_parameters() const;

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

extern template class Sequential<float>;
extern template class Sequential<double>;

}  // namespace fergan::nn
