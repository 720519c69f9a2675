#include <gtest/gtest.h>

#include <set>

#include "fergan/common/error.hpp"
#include "fergan/common/fs.hpp"
#include "fergan/common/random.hpp"
#include "fergan/data/assemble.hpp"
#include "fergan/data/balance.hpp"
#include "fergan/gan/identity_source.hpp"
#include "fergan/gan/latent.hpp"
#include "fergan/gan/procedural_corpus.hpp"
#include "fergan/gan/translator.hpp"
#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

namespace fergan::gan {
namespace {

using testing::TempDir;

TranslatorArchitecture tiny_arch() {
  TranslatorArchitecture a;
  a.width = 2;
  a.downsamples = 1;
  a.residual_blocks = 1;
  a.disc_width = 2;
  a.disc_layers = 1;
  return a;
}

nn::Tensor<double> random_batch(std::size_t n, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  nn::Tensor<double> x({n, 1, size, size});
  for (auto& v : x.values()) v = rng.uniform(0.05, 0.95);
  return x;
}

class TranslatorGradients : public ::testing::TestWithParam<AdversarialLoss> {};

TEST_P(TranslatorGradients, GeneratorObjectiveMatchesFiniteDifferences) {
  auto nets = build_translator<double>(tiny_arch(), 8, false, 21);
  const auto x = random_batch(3, 8, 4);
  const std::vector<int> sources{0, 2, 5}, targets{3, 1, 4};
  const LossWeights w{1.0, 0.7, 2.0};
  // Conv biases ahead of instance norm have exactly zero gradient.

  nets.zero_grad();
  translator_losses(nets, x, sources, targets, w, GetParam(), true);
  std::vector<nn::Param<double>*> params = nets.generator_params();
  for (auto* p : nets.discriminator_params()) params.push_back(p);
  std::vector<nn::Tensor<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  const auto result = testing::check_gradients(
      params, analytic,
      [&] { return translator_losses(nets, x, sources, targets, w, GetParam(), false).total(w); }, 80, 9, 1e-6, 1e-5);
  EXPECT_EQ(result.coordinates, 80u);
  EXPECT_LT(result.max_relative_error, 1e-4);
}

TEST_P(TranslatorGradients, DiscriminatorObjectiveMatchesFiniteDifferences) {
  auto nets = build_translator<double>(tiny_arch(), 8, false, 22);
  const auto x = random_batch(3, 8, 5);
  const std::vector<int> sources{1, 4, 2}, targets{0, 0, 3};
  const LossWeights w{1.0, 1.3, 10.0};

  nets.zero_grad();
  discriminator_losses(nets, x, sources, targets, w, GetParam(), true);
  const auto params = nets.discriminator_params();
  std::vector<nn::Tensor<double>> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  const auto result = testing::check_gradients(
      params, analytic,
      [&] { return discriminator_losses(nets, x, sources, targets, w, GetParam(), false).total(w); }, 60, 10,
      1e-6, 1e-5);
  EXPECT_GT(result.coordinates, 0u);
  EXPECT_LT(result.max_relative_error, 1e-4);
  EXPECT_EQ(discriminator_losses(nets, x, sources, targets, w, GetParam(), false).reconstruction, 0.0);
}

INSTANTIATE_TEST_SUITE_P(AllObjectives, TranslatorGradients,
                         ::testing::Values(AdversarialLoss::kLeastSquares, AdversarialLoss::kLogistic,
                                           AdversarialLoss::kWassersteinClip));

TEST(Translator, IdentityGeneratorHasNoParametersAndZeroCycleLoss) {
  auto nets = build_translator<double>(tiny_arch(), 8, true, 1);
  EXPECT_TRUE(nets.generator_params().empty());
  const auto x = random_batch(2, 8, 6);
  const std::vector<int> s{0, 1}, t{2, 3};
  const auto losses = translator_losses(nets, x, s, t, {}, AdversarialLoss::kLeastSquares, false);
  EXPECT_NEAR(losses.reconstruction, 0.0, 1e-12);
}

TEST(Translator, RejectsMalformedBatches) {
  auto nets = build_translator<double>(tiny_arch(), 8, false, 1);
  const auto x = random_batch(2, 8, 6);
  const std::vector<int> one{0}, two{0, 1}, bad{0, 6};
  EXPECT_THROW(translator_losses(nets, x, one, two, {}, AdversarialLoss::kLogistic, false), ShapeError);
  EXPECT_THROW(translator_losses(nets, x, two, bad, {}, AdversarialLoss::kLogistic, false), ShapeError);
  EXPECT_THROW(translator_losses(nets, random_batch(2, 16, 1), two, two, {}, AdversarialLoss::kLogistic, false),
               ShapeError);
}

GanTrainConfig small_config() {
  GanTrainConfig c;
  c.image_size = 32;
  c.steps = 3;
  c.batch_size = 4;
  c.architecture.width = 4;
  c.architecture.downsamples = 1;
  c.architecture.residual_blocks = 1;
  c.architecture.disc_width = 4;
  c.architecture.disc_layers = 2;
  c.seed = 3;
  return c;
}

TEST(GanTrainConfig, JsonRoundTripAndValidation) {
  auto c = small_config();
  c.adversarial = AdversarialLoss::kWassersteinClip;
  const auto back = GanTrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.digest(), c.digest());

  auto doc = c.to_json();
  doc["image_size"] = 48;
  EXPECT_THROW(GanTrainConfig::from_json(doc), ConfigError);
  doc = c.to_json();
  doc["adversarial"] = "hinge";
  EXPECT_THROW(GanTrainConfig::from_json(doc), ConfigError);
  doc = c.to_json();
  doc["architecture"]["depth"] = 2;
  EXPECT_THROW(GanTrainConfig::from_json(doc), ConfigError);
  EXPECT_EQ(parse_adversarial_loss(to_string(AdversarialLoss::kLogistic)), AdversarialLoss::kLogistic);
}

data::FaceDataset small_corpus(std::size_t ids, std::uint64_t seed = 1) {
  ProceduralCorpusOptions o;
  o.identities = ids;
  o.image_size = 32;
  o.seed = seed;
  return make_procedural_corpus(o);
}

TEST(Checkpoint, RoundTripPreservesTranslations) {
  TempDir dir;
  const auto ckpt = initial_checkpoint(small_config());
  save_checkpoint(dir / "t.bin", ckpt);
  const auto back = load_translator_checkpoint(dir / "t.bin");
  EXPECT_EQ(back.config_digest, ckpt.config_digest);
  EXPECT_EQ(back.step, ckpt.step);
  const auto face = small_corpus(1)[0].image;
  for (Emotion e : kAllEmotions) EXPECT_EQ(translate(back, face, DomainCode::of(e)), translate(ckpt, face, DomainCode::of(e)));

  write_file_atomic(dir / "junk.bin", "junk");
  EXPECT_THROW(load_translator_checkpoint(dir / "junk.bin"), DataError);
}

TEST(Translate, OutputStaysInRangeAndChecksInputs) {
  const auto ckpt = initial_checkpoint(small_config());
  const auto face = small_corpus(1)[0].image;
  const auto out = translate(ckpt, face, DomainCode::of(Emotion::kFear));
  EXPECT_TRUE(out.same_shape(face));
  EXPECT_TRUE(out.within(0.0f, 1.0f));

  EXPECT_THROW(translate(ckpt, ImageTensor(16, 16, 1, 0.5f), DomainCode::of(Emotion::kFear)), ShapeError);
  const std::vector<float> two_hot{1, 1, 0, 0, 0, 0}, short_code{1, 0, 0};
  EXPECT_THROW(translate(ckpt, face, two_hot), ShapeError);
  EXPECT_THROW(translate(ckpt, face, short_code), ShapeError);

  const auto set = synthesize_expression_set(ckpt, face, "g1");
  ASSERT_EQ(set.size(), kNumEmotions);
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_EQ(set[i].emotion, kAllEmotions[i]);
    EXPECT_EQ(set[i].identity_id, "g1");
    EXPECT_EQ(set[i].provenance, data::Provenance::kGenerated);
  }
}

TEST(TrainTranslator, WritesLogsAndIsDeterministic) {
  TempDir dir;
  const auto corpus = small_corpus(4);
  TranslatorTrainOptions opts;
  opts.log_path = dir / "log.csv";
  opts.batch_manifest_path = dir / "batches.csv";
  std::size_t steps_seen = 0;
  opts.on_step = [&](const TranslatorStep&) { ++steps_seen; };
  const auto a = train_translator(corpus, small_config(), opts);
  const auto b = train_translator(corpus, small_config());
  EXPECT_EQ(a.step, 3u);
  EXPECT_EQ(steps_seen, 3u);

  const auto log = read_file(dir / "log.csv");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 4);
  EXPECT_EQ(log.substr(0, log.find('\n')), "step,adversarial,classification,reconstruction,total");
  const auto batches = read_file(dir / "batches.csv");
  EXPECT_EQ(std::count(batches.begin(), batches.end(), '\n'), 4);

  const auto face = corpus[0].image;
  EXPECT_EQ(translate(a, face, DomainCode::of(Emotion::kSadness)), translate(b, face, DomainCode::of(Emotion::kSadness)));
}

TEST(TrainTranslator, RejectsDegenerateData) {
  EXPECT_THROW(train_translator({}, small_config()), DataError);
  const auto corpus = small_corpus(2);
  data::FaceDataset one;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].emotion == Emotion::kHappiness) one.add(corpus[i]);
  EXPECT_THROW(train_translator(one, small_config()), DataError);
}

TEST(ProceduralCorpus, BalancedAndDeterministic) {
  const auto a = small_corpus(5, 9), b = small_corpus(5, 9), c = small_corpus(5, 10);
  ASSERT_EQ(a.size(), 30u);
  EXPECT_TRUE(data::validate_balance(a).balanced);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ids.insert(a[i].identity_id);
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_TRUE(a[i].image.within(0.0f, 1.0f));
  }
  EXPECT_EQ(ids, (std::set<std::string>{"toy0000", "toy0001", "toy0002", "toy0003", "toy0004"}));
  EXPECT_NE(a[0].image, c[0].image);
  // Expressions of one identity differ from each other.
  EXPECT_NE(a[0].image, a[1].image);
}

TEST(IdentitySources, ProceduralIsDeterministicInTheLatent) {
  const ProceduralIdentitySource src(16, 32);
  const auto l0 = LatentVector::sample(16, 7, 0), l1 = LatentVector::sample(16, 7, 1);
  EXPECT_EQ(generate_identity(src, l0), generate_identity(src, l0));
  EXPECT_NE(generate_identity(src, l0), generate_identity(src, l1));
  EXPECT_EQ(generate_identity(src, l0).height(), 32u);
  EXPECT_THROW(generate_identity(src, LatentVector::sample(15, 7, 0)), ShapeError);
  EXPECT_EQ(LatentVector::sample(16, 7, 0).fingerprint(), l0.fingerprint());
}

TEST(IdentitySources, CorpusSamplerAndFactory) {
  EXPECT_THROW(CorpusSampler(data::FaceDataset{}, 32), DataError);
  const CorpusSampler sampler(small_corpus(3), 16);
  const auto img = generate_identity(sampler, LatentVector::sample(4, 1, 2));
  EXPECT_EQ(img.height(), 16u);
  EXPECT_EQ(img, generate_identity(sampler, LatentVector::sample(4, 1, 2)));

  IdentitySourceConfig cfg;
  cfg.kind = "procedural";
  cfg.latent_dim = 8;
  EXPECT_EQ(make_identity_source(cfg)->kind(), IdentitySourceKind::kProcedural);
  cfg.kind = "stylegan";
  EXPECT_THROW(make_identity_source(cfg), ConfigError);
  EXPECT_EQ(parse_identity_source_kind("corpus-sampler"), IdentitySourceKind::kCorpusSampler);
}

TEST(IdentitySources, GenerativeModelArchiveRoundTrip) {
  TempDir dir;
  nn::Sequential<float> net;
  net.emplace<nn::Dense>(4, 64).emplace<nn::Tanh>();
  Rng rng(2);
  net.reset_parameters(rng);
  save_identity_generator(dir / "g.bin", net, 4, 8);
  const GenerativeModelSource loaded(dir / "g.bin");
  const GenerativeModelSource direct(net, 4, 8);
  const auto l = LatentVector::sample(4, 3, 0);
  EXPECT_EQ(generate_identity(loaded, l), generate_identity(direct, l));
  EXPECT_TRUE(generate_identity(loaded, l).within(0.0f, 1.0f));
  EXPECT_THROW(GenerativeModelSource(net, 4, 16), ShapeError);
}

TEST(AssembleGenerated, CountsIdsAndBalance) {
  const auto ckpt = initial_checkpoint(small_config());
  const ProceduralIdentitySource src(ckpt.config.latent_dim, 32);
  data::AssembleOptions opts;
  opts.output_size = 16;
  std::size_t last_done = 0;
  opts.on_progress = [&](std::size_t done, std::size_t total) {
    EXPECT_EQ(total, 3u);
    last_done = done;
  };
  const auto ds = data::assemble_generated(3, ckpt, src, 42, opts);
  EXPECT_EQ(last_done, 3u);
  ASSERT_EQ(ds.size(), 18u);
  EXPECT_TRUE(data::validate_balance(ds).balanced);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ids.insert(ds[i].identity_id);
    EXPECT_EQ(ds[i].provenance, data::Provenance::kGenerated);
    EXPECT_EQ(ds[i].image.height(), 16u);
  }
  EXPECT_EQ(ids, (std::set<std::string>{"gens42_000000", "gens42_000001", "gens42_000002"}));

  const auto again = data::assemble_generated(3, ckpt, src, 42, opts);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(ds[i].image, again[i].image);
  EXPECT_THROW(data::assemble_generated(0, ckpt, src, 42, opts), ConfigError);
}

}  // namespace
}  // namespace fergan::gan
