#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fergan/common/random.hpp"
#include "fergan/nn/archive.hpp"
#include "fergan/nn/loss.hpp"
#include "fergan/nn/optim.hpp"
#include "fergan/nn/sequential.hpp"
#include "support/gradcheck.hpp"

namespace fergan::nn {
namespace {

Tensor<double> random_tensor(Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.normal();
  return t;
}

// Direct nested-loop convolution, independent of the im2col path.
Tensor<double> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                          std::size_t stride, std::size_t pad) {
  const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t cout = w.dim(0), k = w.dim(2);
  const std::size_t oh = (h + 2 * pad - k) / stride + 1, ow = (wd + 2 * pad - k) / stride + 1;
  Tensor<double> y({n, cout, oh, ow});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t o = 0; o < cout; ++o)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double acc = b[o];
          for (std::size_t c = 0; c < cin; ++c)
            for (std::size_t ky = 0; ky < k; ++ky)
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(wd)) continue;
                acc += w[((o * cin + c) * k + ky) * k + kx] * x[((i * cin + c) * h + iy) * wd + ix];
              }
          y[((i * cout + o) * oh + oy) * ow + ox] = acc;
        }
  return y;
}

TEST(Conv2d, MatchesNaiveConvolution) {
  Rng rng(3);
  for (auto [stride, pad] : {std::pair<std::size_t, std::size_t>{1, 1}, {2, 1}, {1, 0}, {2, 0}}) {
    Conv2d<double> conv(3, 4, 3, stride, pad);
    conv.reset_parameters(rng);
    auto ps = conv.params();
    for (auto& v : ps[1]->value.values()) v = rng.normal();
    const auto x = random_tensor({2, 3, 7, 6}, rng);
    const auto y = conv.forward(x, nullptr, {});
    const auto expected = naive_conv(x, ps[0]->value, ps[1]->value, stride, pad);
    ASSERT_EQ(y.shape(), expected.shape());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], expected[i], 1e-12);
  }
}

// Every layer type inside one network, loss = cross-entropy on a dense head.
TEST(Gradients, MixedNetworkMatchesFiniteDifferences) {
  Rng rng(11);
  Sequential<double> body;
  body.emplace<Conv2d>(4, 4, 3, 1, 1).emplace<InstanceNorm>(4).emplace<LeakyReLU>(0.2);
  Sequential<double> net;
  net.emplace<Conv2d>(2, 4, 3, 1, 1)
      .emplace<Tanh>()
      .add(std::make_unique<Residual<double>>(body))
      .emplace<MaxPool2d>(2)
      .emplace<Upsample2d>(2)
      .emplace<Conv2d>(4, 3, 4, 2, 1)
      .emplace<ReLU>()
      .emplace<Flatten>()
      .emplace<Dense>(3 * 4 * 4, 5)
      .emplace<Unflatten>(Shape{5, 1, 1})
      .emplace<Flatten>()
      .emplace<Dense>(5, 6);
  net.reset_parameters(rng);
  const auto x = random_tensor({3, 2, 8, 8}, rng);
  const std::vector<int> labels{1, 4, 0};

  Trace<double> trace;
  const auto logits = net.forward(x, &trace, {});
  const auto loss = softmax_cross_entropy(logits, labels);
  net.zero_grad();
  net.backward(loss.grad, trace);
  const auto analytic = testing::snapshot_grads(net);

  const auto result = testing::check_gradients(
      net.params(), analytic, [&] { return softmax_cross_entropy(net.infer(x), labels).value; }, 60, 5);
  EXPECT_EQ(result.coordinates, 60u);
  EXPECT_LT(result.max_relative_error, 1e-5);
}

TEST(Gradients, InputGradientMatchesFiniteDifferences) {
  Rng rng(5);
  Sequential<double> net;
  net.emplace<Conv2d>(1, 2, 3, 2, 1).emplace<LeakyReLU>(0.2).emplace<Flatten>().emplace<Dense>(2 * 3 * 3, 1);
  net.reset_parameters(rng);
  auto x = random_tensor({2, 1, 6, 6}, rng);
  Trace<double> trace;
  const auto y = net.forward(x, &trace, {});
  const auto loss = mean_squared_to(y, 1.0);
  const auto dx = net.backward(loss.grad, trace);
  for (std::size_t i = 0; i < x.size(); i += 5) {
    const double saved = x[i];
    x[i] = saved + 1e-6;
    const double up = mean_squared_to(net.infer(x), 1.0).value;
    x[i] = saved - 1e-6;
    const double down = mean_squared_to(net.infer(x), 1.0).value;
    x[i] = saved;
    EXPECT_LT(testing::relative_error(dx[i], (up - down) / 2e-6), 1e-5) << "coordinate " << i;
  }
}

TEST(Dropout, InactiveAtInferenceAndScaledInTraining) {
  Dropout<float> drop(0.5);
  Tensor<float> x({1, 1000}, 1.0f);
  EXPECT_EQ(drop.forward(x, nullptr, {}), x);
  Rng rng(1);
  LayerState<float> state;
  const auto y = drop.forward(x, &state, {Mode::kTraining, &rng});
  std::size_t kept = 0;
  for (float v : y.values()) {
    EXPECT_TRUE(v == 0.0f || v == 2.0f);
    kept += v != 0.0f;
  }
  EXPECT_GT(kept, 400u);
  EXPECT_LT(kept, 600u);
}

TEST(Loss, SoftmaxRowsSumToOne) {
  Rng rng(2);
  Tensor<double> logits({20, 6});
  for (auto& v : logits.values()) v = rng.normal(0, 30);
  const auto p = softmax(logits);
  for (std::size_t i = 0; i < 20; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_GE(p[i * 6 + j], 0.0);
      s += p[i * 6 + j];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Loss, LogisticGradientMatchesFiniteDifferences) {
  Tensor<double> x({4}, 0.0);
  x[0] = -3;
  x[1] = -0.2;
  x[2] = 0.7;
  x[3] = 4;
  for (bool real : {true, false}) {
    const auto r = logistic_to(x, real);
    for (std::size_t i = 0; i < 4; ++i) {
      auto up = x, down = x;
      up[i] += 1e-6;
      down[i] -= 1e-6;
      const double numeric = (logistic_to(up, real).value - logistic_to(down, real).value) / 2e-6;
      EXPECT_LT(testing::relative_error(r.grad[i], numeric), 1e-6);
    }
  }
}

TEST(Adam, MinimisesQuadratic) {
  Dense<double> layer(1, 1);
  Rng rng(9);
  layer.reset_parameters(rng);
  Adam<double> opt(layer.params(), {.learning_rate = 0.05});
  Tensor<double> x({1, 1}, 1.0);
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    LayerState<double> st;
    const auto y = layer.forward(x, &st, {});
    layer.backward(mean_squared_to(y, 3.0).grad, st);
    opt.step();
  }
  EXPECT_NEAR(layer.forward(x, nullptr, {})[0], 3.0, 1e-3);
}

TEST(Archive, NetworkRoundTripPreservesOutputs) {
  Rng rng(4);
  Sequential<float> body;
  body.emplace<Conv2d>(2, 2, 3, 1, 1).emplace<ReLU>();
  Sequential<float> net;
  net.emplace<Conv2d>(1, 2, 3, 1, 1).add(std::make_unique<Residual<float>>(body)).emplace<Flatten>().emplace<Dense>(
      2 * 4 * 4, 3);
  net.reset_parameters(rng);
  Archive a;
  a.metadata["note"] = "test";
  store_network(a, "net", net);
  const auto path = std::filesystem::temp_directory_path() / "fergan_archive_test.ckpt";
  write_archive(path, a);
  const Archive b = read_archive(path);
  EXPECT_EQ(b.metadata.at("note"), "test");
  const auto restored = load_network(b, "net");
  Tensor<float> x({2, 1, 4, 4});
  for (auto& v : x.values()) v = static_cast<float>(rng.uniform());
  EXPECT_EQ(net.infer(x), restored.infer(x));
  std::filesystem::remove(path);
}

TEST(Archive, RejectsForeignFiles) {
  const auto path = std::filesystem::temp_directory_path() / "fergan_not_archive.bin";
  { std::ofstream(path) << "hello"; }
  EXPECT_THROW(read_archive(path), DataError);
  std::filesystem::remove(path);
}

TEST(Sequential, ShapeErrorsAreReported) {
  Sequential<float> net;
  net.emplace<Conv2d>(1, 2, 3, 1, 1);
  EXPECT_THROW(net.output_shape({3, 8, 8}), ShapeError);
  EXPECT_THROW(net.infer(Tensor<float>({1, 2, 8, 8})), ShapeError);
}

}  // namespace
}  // namespace fergan::nn
