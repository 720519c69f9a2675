#include "fergan/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "fergan/nn/sequential.hpp"

namespace fergan::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

void expect_rank(const Shape& shape, std::size_t rank, const char* layer) {
  if (shape.size() != rank) {
    throw ShapeError(std::string(layer) + ": expected rank " + std::to_string(rank) + " input, got " +
                     to_string(shape));
  }
}

struct ConvGeometry {
  std::size_t channels, height, width, kernel, stride, padding, out_h, out_w;
};

/// Output columns [lo, hi) whose input column ox * stride + offset - padding
/// falls inside [0, extent).
struct ValidRange {
  std::size_t lo, hi;
};

inline ValidRange valid_range(std::size_t out, std::size_t extent, std::size_t stride, std::size_t offset,
                              std::size_t padding) {
  std::size_t lo = 0;
  if (padding > offset) lo = (padding - offset + stride - 1) / stride;
  if (extent + padding <= offset) return {0, 0};
  const std::size_t hi = std::min(out, (extent - 1 + padding - offset) / stride + 1);
  return {std::min(lo, hi), hi};
}

/// Unfolds one image into the columns of a [C*k*k, ld] matrix; `cols`
/// points at this sample's first column.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols, std::size_t ld) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      const ValidRange ry = valid_range(g.out_h, g.height, g.stride, ki, g.padding);
      for (std::size_t kj = 0; kj < g.kernel; ++kj) {
        const ValidRange rx = valid_range(g.out_w, g.width, g.stride, kj, g.padding);
        T* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * ld;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          T* dst = row + oy * g.out_w;
          if (oy < ry.lo || oy >= ry.hi) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = image + (c * g.height + oy * g.stride + ki - g.padding) * g.width;
          std::fill(dst, dst + rx.lo, T{0});
          if (g.stride == 1) {
            std::copy(src + rx.lo + kj - g.padding, src + rx.hi + kj - g.padding, dst + rx.lo);
          } else {
            for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) dst[ox] = src[ox * g.stride + kj - g.padding];
          }
          std::fill(dst + rx.hi, dst + g.out_w, T{0});
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeometry& g, T* image, std::size_t ld) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      const ValidRange ry = valid_range(g.out_h, g.height, g.stride, ki, g.padding);
      for (std::size_t kj = 0; kj < g.kernel; ++kj) {
        const ValidRange rx = valid_range(g.out_w, g.width, g.stride, kj, g.padding);
        const T* row = cols + ((c * g.kernel + ki) * g.kernel + kj) * ld;
        for (std::size_t oy = ry.lo; oy < ry.hi; ++oy) {
          T* dst = image + (c * g.height + oy * g.stride + ki - g.padding) * g.width;
          const T* src = row + oy * g.out_w;
          for (std::size_t ox = rx.lo; ox < rx.hi; ++ox) dst[ox * g.stride + kj - g.padding] += src[ox];
        }
      }
    }
  }
}

/// Samples per im2col chunk, keeping the unfolded matrix near 4M entries.
std::size_t conv_chunk(std::size_t n, std::size_t k, std::size_t patch) {
  constexpr std::size_t kMaxEntries = std::size_t{1} << 22;
  return std::clamp<std::size_t>(kMaxEntries / std::max<std::size_t>(k * patch, 1), 1, std::max<std::size_t>(n, 1));
}

template <typename T>
void he_normal(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : w.values()) v = static_cast<T>(rng.normal(0.0, stddev));
}

}  // namespace

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
                  std::size_t padding)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(padding),
      weight_{"weight", Tensor<T>({out_channels, in_channels, kernel, kernel}),
              Tensor<T>({out_channels, in_channels, kernel, kernel})},
      bias_{"bias", Tensor<T>({out_channels}), Tensor<T>({out_channels})} {
  if (in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0) {
    throw ShapeError("conv2d: channels, kernel and stride must be positive");
  }
}

template <typename T>
nlohmann::json Conv2d<T>::config() const {
  return {{"type", kind()},       {"in_channels", in_channels_}, {"out_channels", out_channels_},
          {"kernel", kernel_},    {"stride", stride_},           {"padding", padding_}};
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
  expect_rank(in, 3, "conv2d");
  if (in[0] != in_channels_) {
    throw ShapeError("conv2d: expected " + std::to_string(in_channels_) + " input channels, got " + to_string(in));
  }
  if (in[1] + 2 * padding_ < kernel_ || in[2] + 2 * padding_ < kernel_) {
    throw ShapeError("conv2d: input " + to_string(in) + " smaller than kernel");
  }
  return {out_channels_, (in[1] + 2 * padding_ - kernel_) / stride_ + 1, (in[2] + 2 * padding_ - kernel_) / stride_ + 1};
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  expect_rank(x.shape(), 4, "conv2d");
  const std::size_t n = x.dim(0);
  const Shape out_sample = output_shape({x.dim(1), x.dim(2), x.dim(3)});
  const ConvGeometry g{in_channels_, x.dim(2), x.dim(3), kernel_, stride_, padding_, out_sample[1], out_sample[2]};
  const std::size_t k = in_channels_ * kernel_ * kernel_;
  const std::size_t patch = g.out_h * g.out_w;

  Tensor<T> y({n, out_channels_, g.out_h, g.out_w});
  const std::size_t chunk = conv_chunk(n, k, patch);
  std::vector<T> cols(k * chunk * patch);
  RowMatrix<T> out(out_channels_, chunk * patch);
  const ConstMatrixMap<T> w(weight_.value.data(), out_channels_, k);
  const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias_.value.data(), out_channels_);
  const std::size_t in_stride = in_channels_ * g.height * g.width;
  for (std::size_t first = 0; first < n; first += chunk) {
    const std::size_t m = std::min(chunk, n - first), ld = m * patch;
    for (std::size_t j = 0; j < m; ++j) im2col(x.data() + (first + j) * in_stride, g, cols.data() + j * patch, ld);
    out.leftCols(ld).noalias() = w * ConstMatrixMap<T>(cols.data(), k, ld);
    for (std::size_t j = 0; j < m; ++j) {
      MatrixMap<T> dst(y.data() + (first + j) * out_channels_ * patch, out_channels_, patch);
      dst = out.middleCols(j * patch, patch);
      dst.colwise() += b;
    }
  }
  if (state) state->input = x;
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  const Tensor<T>& x = state.input;
  const std::size_t n = x.dim(0);
  const ConvGeometry g{in_channels_, x.dim(2), x.dim(3), kernel_, stride_, padding_, grad_out.dim(2), grad_out.dim(3)};
  const std::size_t k = in_channels_ * kernel_ * kernel_;
  const std::size_t patch = g.out_h * g.out_w;
  const std::size_t in_stride = in_channels_ * g.height * g.width;

  Tensor<T> dx(x.shape());
  const std::size_t chunk = conv_chunk(n, k, patch);
  std::vector<T> cols(k * chunk * patch);
  RowMatrix<T> dy(out_channels_, chunk * patch);
  RowMatrix<T> dcols(k, chunk * patch);
  const ConstMatrixMap<T> w(weight_.value.data(), out_channels_, k);
  MatrixMap<T> dw(weight_.grad.data(), out_channels_, k);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(bias_.grad.data(), out_channels_);
  for (std::size_t first = 0; first < n; first += chunk) {
    const std::size_t m = std::min(chunk, n - first), ld = m * patch;
    for (std::size_t j = 0; j < m; ++j) {
      im2col(x.data() + (first + j) * in_stride, g, cols.data() + j * patch, ld);
      dy.middleCols(j * patch, patch) =
          ConstMatrixMap<T>(grad_out.data() + (first + j) * out_channels_ * patch, out_channels_, patch);
    }
    const auto dy_used = dy.leftCols(ld);
    dw.noalias() += dy_used * ConstMatrixMap<T>(cols.data(), k, ld).transpose();
    db += dy_used.rowwise().sum();
    dcols.leftCols(ld).noalias() = w.transpose() * dy_used;
    for (std::size_t j = 0; j < m; ++j) {
      col2im_add(dcols.data() + j * patch, g, dx.data() + (first + j) * in_stride, chunk * patch);
    }
  }
  return dx;
}

template <typename T>
void Conv2d<T>::reset_parameters(Rng& rng) {
  he_normal(weight_.value, in_channels_ * kernel_ * kernel_, rng);
  bias_.value.fill(T{0});
}

// ---------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(std::size_t in_features, std::size_t out_features)
    : in_features_(in_features),
      out_features_(out_features),
      weight_{"weight", Tensor<T>({out_features, in_features}), Tensor<T>({out_features, in_features})},
      bias_{"bias", Tensor<T>({out_features}), Tensor<T>({out_features})} {
  if (in_features == 0 || out_features == 0) throw ShapeError("dense: feature counts must be positive");
}

template <typename T>
nlohmann::json Dense<T>::config() const {
  return {{"type", kind()}, {"in_features", in_features_}, {"out_features", out_features_}};
}

template <typename T>
Shape Dense<T>::output_shape(const Shape& in) const {
  if (in.size() != 1 || in[0] != in_features_) {
    throw ShapeError("dense: expected [" + std::to_string(in_features_) + "] input, got " + to_string(in));
  }
  return {out_features_};
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  expect_rank(x.shape(), 2, "dense");
  output_shape({x.dim(1)});
  const std::size_t n = x.dim(0);
  Tensor<T> y({n, out_features_});
  const ConstMatrixMap<T> in(x.data(), n, in_features_);
  const ConstMatrixMap<T> w(weight_.value.data(), out_features_, in_features_);
  MatrixMap<T> out(y.data(), n, out_features_);
  out.noalias() = in * w.transpose();
  out.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_.value.data(), out_features_);
  if (state) state->input = x;
  return y;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  const Tensor<T>& x = state.input;
  const std::size_t n = x.dim(0);
  const ConstMatrixMap<T> in(x.data(), n, in_features_);
  const ConstMatrixMap<T> dy(grad_out.data(), n, out_features_);
  MatrixMap<T>(weight_.grad.data(), out_features_, in_features_).noalias() += dy.transpose() * in;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias_.grad.data(), out_features_) += dy.colwise().sum();
  Tensor<T> dx(x.shape());
  MatrixMap<T>(dx.data(), n, in_features_).noalias() =
      dy * ConstMatrixMap<T>(weight_.value.data(), out_features_, in_features_);
  return dx;
}

template <typename T>
void Dense<T>::reset_parameters(Rng& rng) {
  he_normal(weight_.value, in_features_, rng);
  bias_.value.fill(T{0});
}

// ---------------------------------------------------------------- MaxPool2d

template <typename T>
Shape MaxPool2d<T>::output_shape(const Shape& in) const {
  expect_rank(in, 3, "maxpool2d");
  if (window_ == 0 || in[1] < window_ || in[2] < window_) {
    throw ShapeError("maxpool2d: window " + std::to_string(window_) + " does not fit " + to_string(in));
  }
  return {in[0], in[1] / window_, in[2] / window_};
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  expect_rank(x.shape(), 4, "maxpool2d");
  const Shape os = output_shape({x.dim(1), x.dim(2), x.dim(3)});
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = os[1], ow = os[2];
  Tensor<T> y({n, c, oh, ow});
  std::vector<std::uint32_t> argmax;
  if (state) argmax.resize(y.size());
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* src = x.data() + plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t dy = 0; dy < window_; ++dy) {
          const std::size_t row = (oy * window_ + dy) * w + ox * window_;
          for (std::size_t dx = 0; dx < window_; ++dx) {
            if (src[row + dx] > best) {
              best = src[row + dx];
              best_idx = row + dx;
            }
          }
        }
        y[o] = best;
        if (state) argmax[o] = static_cast<std::uint32_t>(plane * h * w + best_idx);
      }
    }
  }
  if (state) {
    state->input = Tensor<T>(x.shape());  // only the shape is needed
    state->argmax = std::move(argmax);
  }
  return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  Tensor<T> dx(state.input.shape());
  for (std::size_t i = 0; i < grad_out.size(); ++i) dx[state.argmax[i]] += grad_out[i];
  return dx;
}

// ---------------------------------------------------------------- Dropout

template <typename T>
Dropout<T>::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ShapeError("dropout: rate must lie in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const {
  if (ctx.mode != Mode::kTraining || rate_ == 0.0) {
    if (state) state->mask = Tensor<T>();
    return x;
  }
  if (!ctx.rng) throw Error("dropout: training mode requires a random generator");
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
  Tensor<T> mask(x.shape());
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = ctx.rng->uniform() < rate_ ? T{0} : keep_scale;
    y[i] = x[i] * mask[i];
  }
  if (state) state->mask = std::move(mask);
  return y;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  if (state.mask.empty()) return grad_out;
  Tensor<T> dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * state.mask[i];
  return dx;
}

// ---------------------------------------------------------------- activations

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
  if (state) state->output = y;
  return y;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  Tensor<T> dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = state.output[i] > T{0} ? grad_out[i] : T{0};
  return dx;
}

template <typename T>
Tensor<T> LeakyReLU<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  const T slope = static_cast<T>(slope_);
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : slope * x[i];
  if (state) state->input = x;
  return y;
}

template <typename T>
Tensor<T> LeakyReLU<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  const T slope = static_cast<T>(slope_);
  Tensor<T> dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = state.input[i] > T{0} ? grad_out[i] : slope * grad_out[i];
  return dx;
}

template <typename T>
Tensor<T> Tanh<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  if (state) state->output = y;
  return y;
}

template <typename T>
Tensor<T> Tanh<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  Tensor<T> dx(grad_out.shape());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * (T{1} - state.output[i] * state.output[i]);
  return dx;
}

// ---------------------------------------------------------------- reshaping

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  if (x.rank() < 2) throw ShapeError("flatten: expected batched input, got " + to_string(x.shape()));
  if (state) state->input = Tensor<T>(x.shape());
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  return grad_out.reshaped(state.input.shape());
}

template <typename T>
Shape Unflatten<T>::output_shape(const Shape& in) const {
  if (in.size() != 1 || in[0] != numel(sample_shape_)) {
    throw ShapeError("unflatten: cannot view " + to_string(in) + " as " + to_string(sample_shape_));
  }
  return sample_shape_;
}

template <typename T>
Tensor<T> Unflatten<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  expect_rank(x.shape(), 2, "unflatten");
  output_shape({x.dim(1)});
  Shape s{x.dim(0)};
  s.insert(s.end(), sample_shape_.begin(), sample_shape_.end());
  if (state) state->input = Tensor<T>(x.shape());
  return x.reshaped(std::move(s));
}

template <typename T>
Tensor<T> Unflatten<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  return grad_out.reshaped(state.input.shape());
}

template <typename T>
Shape Upsample2d<T>::output_shape(const Shape& in) const {
  expect_rank(in, 3, "upsample2d");
  return {in[0], in[1] * factor_, in[2] * factor_};
}

template <typename T>
Tensor<T> Upsample2d<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  expect_rank(x.shape(), 4, "upsample2d");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t oh = h * factor_, ow = w * factor_;
  Tensor<T> y({x.dim(0), x.dim(1), oh, ow});
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = x.data() + p * h * w;
    T* dst = y.data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = src[(oy / factor_) * w + ox / factor_];
    }
  }
  if (state) state->input = Tensor<T>(x.shape());
  return y;
}

template <typename T>
Tensor<T> Upsample2d<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  const Shape& s = state.input.shape();
  const std::size_t planes = s[0] * s[1], h = s[2], w = s[3];
  const std::size_t oh = h * factor_, ow = w * factor_;
  Tensor<T> dx(s);
  for (std::size_t p = 0; p < planes; ++p) {
    const T* src = grad_out.data() + p * oh * ow;
    T* dst = dx.data() + p * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) dst[(oy / factor_) * w + ox / factor_] += src[oy * ow + ox];
    }
  }
  return dx;
}

// ---------------------------------------------------------------- InstanceNorm

template <typename T>
InstanceNorm<T>::InstanceNorm(std::size_t channels, double eps)
    : channels_(channels),
      eps_(eps),
      gamma_{"gamma", Tensor<T>({channels}, T{1}), Tensor<T>({channels})},
      beta_{"beta", Tensor<T>({channels}), Tensor<T>({channels})} {}

template <typename T>
void InstanceNorm<T>::reset_parameters(Rng&) {
  gamma_.value.fill(T{1});
  beta_.value.fill(T{0});
}

template <typename T>
Tensor<T> InstanceNorm<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext&) const {
  expect_rank(x.shape(), 4, "instance_norm");
  if (x.dim(1) != channels_) throw ShapeError("instance_norm: channel mismatch, got " + to_string(x.shape()));
  const std::size_t n = x.dim(0), hw = x.dim(2) * x.dim(3);
  Tensor<T> y(x.shape());
  Tensor<T> normalized(x.shape());
  Tensor<T> inv_std({n, channels_});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const std::size_t base = (i * channels_ + c) * hw;
      double mean = 0.0;
      for (std::size_t j = 0; j < hw; ++j) mean += x[base + j];
      mean /= static_cast<double>(hw);
      double var = 0.0;
      for (std::size_t j = 0; j < hw; ++j) var += (x[base + j] - mean) * (x[base + j] - mean);
      var /= static_cast<double>(hw);
      const double istd = 1.0 / std::sqrt(var + eps_);
      inv_std[i * channels_ + c] = static_cast<T>(istd);
      for (std::size_t j = 0; j < hw; ++j) {
        normalized[base + j] = static_cast<T>((x[base + j] - mean) * istd);
        y[base + j] = gamma_.value[c] * normalized[base + j] + beta_.value[c];
      }
    }
  }
  if (state) {
    state->output = std::move(normalized);
    state->mask = std::move(inv_std);
  }
  return y;
}

template <typename T>
Tensor<T> InstanceNorm<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  const Tensor<T>& xhat = state.output;
  const std::size_t n = xhat.dim(0), hw = xhat.dim(2) * xhat.dim(3);
  Tensor<T> dx(xhat.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < channels_; ++c) {
      const std::size_t base = (i * channels_ + c) * hw;
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t j = 0; j < hw; ++j) {
        sum_dy += grad_out[base + j];
        sum_dy_xhat += grad_out[base + j] * xhat[base + j];
      }
      gamma_.grad[c] += static_cast<T>(sum_dy_xhat);
      beta_.grad[c] += static_cast<T>(sum_dy);
      const double g = gamma_.value[c] * state.mask[i * channels_ + c] / static_cast<double>(hw);
      for (std::size_t j = 0; j < hw; ++j) {
        dx[base + j] = static_cast<T>(
            g * (static_cast<double>(hw) * grad_out[base + j] - sum_dy - xhat[base + j] * sum_dy_xhat));
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- Residual

template <typename T>
Residual<T>::Residual(Sequential<T> body) : body_(std::make_unique<Sequential<T>>(std::move(body))) {}

template <typename T>
Residual<T>::Residual(const Residual& other) : body_(std::make_unique<Sequential<T>>(*other.body_)) {}

template <typename T>
Residual<T>::~Residual() = default;

template <typename T>
nlohmann::json Residual<T>::config() const {
  return {{"type", kind()}, {"body", body_->describe()}};
}

template <typename T>
Tensor<T> Residual<T>::forward(const Tensor<T>& x, LayerState<T>* state, const ForwardContext& ctx) const {
  Trace<T>* trace = state ? &state->children : nullptr;
  Tensor<T> y = body_->forward(x, trace, ctx);
  if (y.shape() != x.shape()) throw ShapeError("residual: body changed shape to " + to_string(y.shape()));
  y += x;
  return y;
}

template <typename T>
Tensor<T> Residual<T>::backward(const Tensor<T>& grad_out, const LayerState<T>& state) {
  Tensor<T> dx = body_->backward(grad_out, state.children);
  dx += grad_out;
  return dx;
}

template <typename T>
std::vector<Param<T>*> Residual<T>::params() {
  return body_->params();
}

template <typename T>
std::vector<const Param<T>*> Residual<T>::params() const {
  return std::as_const(*body_).params();
}

template <typename T>
void Residual<T>::reset_parameters(Rng& rng) {
  body_->reset_parameters(rng);
}

// ---------------------------------------------------------------- factory

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const nlohmann::json& c) {
  const std::string type = c.at("type").get<std::string>();
  if (type == "conv2d") {
    return std::make_unique<Conv2d<T>>(c.at("in_channels"), c.at("out_channels"), c.at("kernel"), c.at("stride"),
                                       c.at("padding"));
  }
  if (type == "dense") return std::make_unique<Dense<T>>(c.at("in_features"), c.at("out_features"));
  if (type == "maxpool2d") return std::make_unique<MaxPool2d<T>>(c.at("window"));
  if (type == "dropout") return std::make_unique<Dropout<T>>(c.at("rate").get<double>());
  if (type == "relu") return std::make_unique<ReLU<T>>();
  if (type == "leaky_relu") return std::make_unique<LeakyReLU<T>>(c.at("slope").get<double>());
  if (type == "tanh") return std::make_unique<Tanh<T>>();
  if (type == "flatten") return std::make_unique<Flatten<T>>();
  if (type == "unflatten") return std::make_unique<Unflatten<T>>(c.at("shape").get<Shape>());
  if (type == "upsample2d") return std::make_unique<Upsample2d<T>>(c.at("factor"));
  if (type == "instance_norm") return std::make_unique<InstanceNorm<T>>(c.at("channels"), c.at("eps").get<double>());
  if (type == "residual") return std::make_unique<Residual<T>>(Sequential<T>::from_description(c.at("body")));
  throw ShapeError("unknown layer type: " + type);
}

template class Conv2d<float>;
template class Conv2d<double>;
template class Dense<float>;
template class Dense<double>;
template class MaxPool2d<float>;
template class MaxPool2d<double>;
template class Dropout<float>;
template class Dropout<double>;
template class ReLU<float>;
template class ReLU<double>;
template class LeakyReLU<float>;
template class LeakyReLU<double>;
template class Tanh<float>;
template class Tanh<double>;
template class Flatten<float>;
template class Flatten<double>;
template class Unflatten<float>;
template class Unflatten<double>;
template class Upsample2d<float>;
template class Upsample2d<double>;
template class InstanceNorm<float>;
template class InstanceNorm<double>;
template class Residual<float>;
template class Residual<double>;
template std::unique_ptr<Layer<float>> make_layer<float>(const nlohmann::json&);
template std::unique_ptr<Layer<double>> make_layer<double>(const nlohmann::json&);

}  // namespace fergan::nn
