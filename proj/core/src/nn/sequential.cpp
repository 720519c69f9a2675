#include "fergan/nn/sequential.hpp"

namespace fergan::nn {

template <typename T>
Sequential<T>::Sequential(const Sequential& other) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Sequential<T>& Sequential<T>::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
Sequential<T>& Sequential<T>::add(std::unique_ptr<Layer<T>> layer) {
  layers_.push_back(std::move(layer));
  return *this;
}

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x, Trace<T>* trace, const ForwardContext& ctx) const {
  if (trace) {
    trace->clear();
    trace->resize(layers_.size());
  }
  if (layers_.empty()) return x;
  Tensor<T> h = layers_[0]->forward(x, trace ? &(*trace)[0] : nullptr, ctx);
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    h = layers_[i]->forward(h, trace ? &(*trace)[i] : nullptr, ctx);
  }
  return h;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad_out, const Trace<T>& trace) {
  if (trace.size() != layers_.size()) throw Error("sequential: trace does not belong to this network");
  Tensor<T> g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g, trace[i]);
  return g;
}

template <typename T>
std::vector<Param<T>*> Sequential<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& l : layers_) {
    auto p = l->params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

template <typename T>
std::vector<const Param<T>*> Sequential<T>::params() const {
  std::vector<const Param<T>*> out;
  for (const auto& l : layers_) {
    auto p = std::as_const(*l).params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

template <typename T>
void Sequential<T>::zero_grad() {
  for (auto* p : params()) p->grad.fill(T{0});
}

template <typename T>
void Sequential<T>::reset_parameters(Rng& rng) {
  for (auto& l : layers_) l->reset_parameters(rng);
}

template <typename T>
std::size_t Sequential<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto* p : params()) total += p->value.size();
  return total;
}

template <typename T>
std::vector<Shape> Sequential<T>::layer_shapes(const Shape& input) const {
  std::vector<Shape> shapes;
  Shape s = input;
  for (const auto& l : layers_) {
    s = l->output_shape(s);
    shapes.push_back(s);
  }
  return shapes;
}

template <typename T>
Shape Sequential<T>::output_shape(const Shape& input) const {
  auto shapes = layer_shapes(input);
  return shapes.empty() ? input : shapes.back();
}

template <typename T>
nlohmann::json Sequential<T>::describe() const {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : layers_) layers.push_back(l->config());
  return layers;
}

template <typename T>
Sequential<T> Sequential<T>::from_description(const nlohmann::json& description) {
  Sequential net;
  for (const auto& c : description) net.add(make_layer<T>(c));
  return net;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> Sequential<T>::named_parameters() const {
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto ps = std::as_const(*layers_[i]).params();
    for (std::size_t j = 0; j < ps.size(); ++j) {
      // Nested layers may hold several params with the same local name.
      std::string name = std::to_string(i) + "." + ps[j]->name;
      if (layers_[i]->kind() == "residual") name = std::to_string(i) + "." + std::to_string(j) + "." + ps[j]->name;
      out.emplace_back(std::move(name), &ps[j]->value);
    }
  }
  return out;
}

template class Sequential<float>;
template class Sequential<double>;

}  // namespace fergan::nn
