#include <benchmark/benchmark.h>

#include "fergan/common/random.hpp"
#include "fergan/fer/classifier.hpp"
#include "fergan/gan/procedural_corpus.hpp"
#include "fergan/gan/translator.hpp"
#include "fergan/nn/layers.hpp"
#include "fergan/nn/loss.hpp"
#include "fergan/nn/optim.hpp"

namespace {

using namespace fergan;

nn::Tensor<float> random_tensor(nn::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  nn::Tensor<float> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform());
  return t;
}

// Args: channels in, channels out, image side.
void BM_Conv2dForward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0)), cout = static_cast<std::size_t>(state.range(1));
  const auto side = static_cast<std::size_t>(state.range(2));
  nn::Conv2d<float> conv(cin, cout, 3, 1, 1);
  Rng rng(1);
  conv.reset_parameters(rng);
  const auto x = random_tensor({16, cin, side, side}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x, nullptr, {}));
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_Conv2dForward)->Args({1, 32, 64})->Args({32, 64, 64})->Args({64, 128, 32})->Unit(benchmark::kMillisecond);

// One minibatch update of the classifier; arg 0 is the input side.
void BM_ClassifierStep(benchmark::State& state) {
  fer::ClassifierSpec spec;
  spec.input_size = static_cast<std::size_t>(state.range(0));
  if (spec.input_size == 32) {
    spec.conv_widths = {8, 16, 32, 32};
    spec.dense_units = 64;
  }
  auto net = fer::build_network<float>(spec, 0);
  nn::Adam<float> opt(net.params(), {});
  const std::size_t batch = 32;
  const auto x = random_tensor({batch, 1, spec.input_size, spec.input_size}, 3);
  std::vector<int> labels(batch);
  for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % kNumEmotions);
  Rng dropout(4);
  for (auto _ : state) {
    nn::Trace<float> trace;
    const auto logits = net.forward(x, &trace, {nn::Mode::kTraining, &dropout});
    const auto loss = nn::softmax_cross_entropy(logits, labels);
    opt.zero_grad();
    net.backward(loss.grad, trace);
    opt.step();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_ClassifierStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

// Generator plus discriminator objectives with backprop on a 16-image batch.
void BM_TranslatorStep(benchmark::State& state) {
  gan::TranslatorArchitecture arch;
  auto nets = gan::build_translator<float>(arch, 32, false, 5);
  const auto x = random_tensor({16, 1, 32, 32}, 6);
  std::vector<int> src(16), tgt(16);
  for (int i = 0; i < 16; ++i) {
    src[i] = i % 6;
    tgt[i] = (i + 1) % 6;
  }
  const gan::LossWeights w;
  for (auto _ : state) {
    nets.zero_grad();
    benchmark::DoNotOptimize(
        gan::discriminator_losses(nets, x, src, tgt, w, gan::AdversarialLoss::kLeastSquares, true));
    nets.zero_grad();
    benchmark::DoNotOptimize(gan::translator_losses(nets, x, src, tgt, w, gan::AdversarialLoss::kLeastSquares, true));
  }
}
BENCHMARK(BM_TranslatorStep)->Unit(benchmark::kMillisecond);

void BM_Translate(benchmark::State& state) {
  gan::GanTrainConfig cfg;
  const auto ckpt = gan::initial_checkpoint(cfg);
  gan::ProceduralCorpusOptions o;
  o.identities = 1;
  o.image_size = 32;
  const auto face = gan::make_procedural_corpus(o)[0].image;
  for (auto _ : state) benchmark::DoNotOptimize(gan::translate(ckpt, face, DomainCode::of(Emotion::kFear)));
}
BENCHMARK(BM_Translate)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
