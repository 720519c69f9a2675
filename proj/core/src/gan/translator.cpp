#include "fergan/gan/translator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "fergan/common/hash.hpp"
#include "fergan/common/json_fields.hpp"
#include "fergan/common/random.hpp"
#include "fergan/data/preprocess.hpp"
#include "fergan/nn/archive.hpp"
#include "fergan/nn/loss.hpp"
#include "fergan/nn/optim.hpp"

namespace fergan::gan {

using nn::Tensor;

namespace {

constexpr const char* kCheckpointKind = "fergan.translator";
constexpr std::size_t kConditionChannels = 1 + kNumEmotions;

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

template <typename T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

/// [N, 1, H, W] image batch plus six constant planes holding the one-hot target.
template <typename T>
Tensor<T> condition(const Tensor<T>& images, std::span<const int> targets) {
  const std::size_t n = images.dim(0), h = images.dim(2), w = images.dim(3), plane = h * w;
  if (targets.size() != n) throw ShapeError("translator: target count does not match batch size");
  Tensor<T> out({n, kConditionChannels, h, w});
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] < 0 || targets[i] >= static_cast<int>(kNumEmotions)) {
      throw ShapeError("translator: target label out of range");
    }
    T* dst = out.data() + i * kConditionChannels * plane;
    std::copy_n(images.data() + i * plane, plane, dst);
    std::fill_n(dst + (1 + static_cast<std::size_t>(targets[i])) * plane, plane, T{1});
  }
  return out;
}

template <typename T>
struct GeneratorPass {
  Tensor<T> input;  // [N, 1, H, W] in [-1, 1]
  Tensor<T> raw;    // [N, 2, H, W] pre-activation mask and colour maps
  Tensor<T> output;
  nn::Trace<T> trace;
};

template <typename T>
GeneratorPass<T> run_generator(const TranslatorNets<T>& nets, const Tensor<T>& x, std::span<const int> targets,
                               bool keep_trace) {
  GeneratorPass<T> pass;
  pass.input = x;
  if (nets.identity_generator) {
    if (targets.size() != x.dim(0)) throw ShapeError("translator: target count does not match batch size");
    pass.output = x;
    return pass;
  }
  pass.raw = nets.generator.forward(condition(x, targets), keep_trace ? &pass.trace : nullptr, {});
  const std::size_t n = x.dim(0), plane = x.dim(2) * x.dim(3);
  pass.output = Tensor<T>(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* a = pass.raw.data() + i * 2 * plane;
    const T* b = a + plane;
    const T* xi = x.data() + i * plane;
    T* y = pass.output.data() + i * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      const T m = sigmoid(a[p]);
      y[p] = m * xi[p] + (T{1} - m) * std::tanh(b[p]);
    }
  }
  return pass;
}

/// Gradient of the loss with respect to the generator's image input, given
/// the gradient at its output. Accumulates generator parameter gradients.
template <typename T>
Tensor<T> backward_generator(TranslatorNets<T>& nets, const GeneratorPass<T>& pass, const Tensor<T>& grad_y) {
  if (nets.identity_generator) return grad_y;
  const Tensor<T>& x = pass.input;
  const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3), plane = h * w;
  Tensor<T> grad_raw(pass.raw.shape());
  Tensor<T> grad_x(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const T* a = pass.raw.data() + i * 2 * plane;
    const T* b = a + plane;
    const T* xi = x.data() + i * plane;
    const T* gy = grad_y.data() + i * plane;
    T* ga = grad_raw.data() + i * 2 * plane;
    T* gb = ga + plane;
    T* gx = grad_x.data() + i * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      const T m = sigmoid(a[p]);
      const T c = std::tanh(b[p]);
      ga[p] = gy[p] * m * (T{1} - m) * (xi[p] - c);
      gb[p] = gy[p] * (T{1} - m) * (T{1} - c * c);
      gx[p] = gy[p] * m;
    }
  }
  const Tensor<T> grad_in = nets.generator.backward(grad_raw, pass.trace);
  for (std::size_t i = 0; i < n; ++i) {
    const T* src = grad_in.data() + i * kConditionChannels * plane;
    T* gx = grad_x.data() + i * plane;
    for (std::size_t p = 0; p < plane; ++p) gx[p] += src[p];
  }
  return grad_x;
}

template <typename T>
struct DiscriminatorPass {
  nn::Trace<T> trunk, src, cls;
  Tensor<T> realness;  // [N, 1]
  Tensor<T> logits;    // [N, 6]
};

template <typename T>
DiscriminatorPass<T> run_discriminator(const TranslatorNets<T>& nets, const Tensor<T>& x, bool keep_trace) {
  DiscriminatorPass<T> pass;
  const Tensor<T> features = nets.disc_trunk.forward(x, keep_trace ? &pass.trunk : nullptr, {});
  pass.realness = nets.disc_src.forward(features, keep_trace ? &pass.src : nullptr, {});
  pass.logits = nets.disc_cls.forward(features, keep_trace ? &pass.cls : nullptr, {});
  return pass;
}

template <typename T>
Tensor<T> backward_discriminator(TranslatorNets<T>& nets, const DiscriminatorPass<T>& pass,
                                 const Tensor<T>& grad_realness, const Tensor<T>& grad_logits) {
  Tensor<T> grad_features = nets.disc_src.backward(grad_realness, pass.src);
  grad_features += nets.disc_cls.backward(grad_logits, pass.cls);
  return nets.disc_trunk.backward(grad_features, pass.trunk);
}

/// Adversarial term pushing `scores` toward "real" or "fake".
template <typename T>
nn::LossResult<T> adversarial_term(const Tensor<T>& scores, bool toward_real, AdversarialLoss kind) {
  switch (kind) {
    case AdversarialLoss::kLeastSquares:
      return nn::mean_squared_to(scores, toward_real ? T{1} : T{0});
    case AdversarialLoss::kLogistic:
      return nn::logistic_to(scores, toward_real);
    case AdversarialLoss::kWassersteinClip: {
      nn::LossResult<T> r = nn::mean_of(scores);
      if (toward_real) {
        r.value = -r.value;
        r.grad *= T{-1};
      }
      return r;
    }
  }
  throw ConfigError("unknown adversarial loss");
}

template <typename T>
Tensor<T> to_signed(const Tensor<T>& images) {
  Tensor<T> out = images;
  for (auto& v : out.values()) v = v * T{2} - T{1};
  return out;
}

template <typename T>
void check_batch(const TranslatorNets<T>& nets, const Tensor<T>& images, std::span<const int> sources,
                 std::span<const int> targets) {
  if (images.rank() != 4 || images.dim(0) == 0) throw ShapeError("translator: empty or malformed batch");
  if (images.dim(1) != 1 || images.dim(2) != nets.image_size || images.dim(3) != nets.image_size) {
    throw ShapeError("translator: expected [N, 1, " + std::to_string(nets.image_size) + ", " +
                     std::to_string(nets.image_size) + "] batch, got " + nn::to_string(images.shape()));
  }
  if (sources.size() != images.dim(0) || targets.size() != images.dim(0)) {
    throw ShapeError("translator: label count does not match batch size");
  }
  for (int s : sources) {
    if (s < 0 || s >= static_cast<int>(kNumEmotions)) throw ShapeError("translator: source label out of range");
  }
}

Tensor<float> image_batch(std::span<const ImageTensor> images, std::size_t size) {
  Tensor<float> out({images.size(), 1, size, size});
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageTensor& img = images[i];
    if (img.height() != size || img.width() != size || img.channels() != 1) {
      throw ShapeError("translator: expected a " + std::to_string(size) + "x" + std::to_string(size) +
                       "x1 image, got " + std::to_string(img.height()) + "x" + std::to_string(img.width()) + "x" +
                       std::to_string(img.channels()));
    }
    std::copy(img.values().begin(), img.values().end(), out.data() + i * size * size);
  }
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

AdversarialLoss parse_adversarial_loss(std::string_view text) {
  if (text == "least_squares") return AdversarialLoss::kLeastSquares;
  if (text == "logistic") return AdversarialLoss::kLogistic;
  if (text == "wasserstein_clip") return AdversarialLoss::kWassersteinClip;
  throw ConfigError("unknown adversarial loss '" + std::string(text) +
                    "' (expected least_squares, logistic, or wasserstein_clip)");
}

std::string_view to_string(AdversarialLoss loss) {
  switch (loss) {
    case AdversarialLoss::kLeastSquares: return "least_squares";
    case AdversarialLoss::kLogistic: return "logistic";
    case AdversarialLoss::kWassersteinClip: return "wasserstein_clip";
  }
  return "least_squares";
}

void GanTrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("gan config: " + msg); };
  if (image_size < 32 || !is_power_of_two(image_size)) fail("image_size must be a power of two >= 32");
  if (latent_dim == 0) fail("latent_dim must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (n_critic == 0) fail("n_critic must be positive");
  if (!(lr_generator > 0) || !(lr_discriminator > 0)) fail("learning rates must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) fail("betas must lie in [0, 1)");
  for (double w : {loss_weights.adversarial, loss_weights.classification, loss_weights.reconstruction}) {
    if (!(w >= 0) || !std::isfinite(w)) fail("loss weights must be finite and nonnegative");
  }
  if (!(clip_value > 0)) fail("clip_value must be positive");
  const auto& a = architecture;
  if (a.width == 0 || a.disc_width == 0) fail("network widths must be positive");
  if (a.disc_layers == 0) fail("disc_layers must be positive");
  if (a.downsamples >= 16 || image_size % (std::size_t{1} << a.downsamples) != 0) {
    fail("image_size must be divisible by 2^downsamples");
  }
  if (a.disc_layers >= 16 || (image_size >> a.disc_layers) == 0) fail("too many discriminator layers for image_size");
}

nlohmann::json GanTrainConfig::to_json() const {
  const auto& a = architecture;
  return {
      {"image_size", image_size},
      {"latent_dim", latent_dim},
      {"steps", steps},
      {"batch_size", batch_size},
      {"lr_generator", lr_generator},
      {"lr_discriminator", lr_discriminator},
      {"beta1", beta1},
      {"beta2", beta2},
      {"loss_weights",
       {{"adversarial", loss_weights.adversarial},
        {"classification", loss_weights.classification},
        {"reconstruction", loss_weights.reconstruction}}},
      {"adversarial", std::string(to_string(adversarial))},
      {"n_critic", n_critic},
      {"clip_value", clip_value},
      {"identity_generator", identity_generator},
      {"architecture",
       {{"width", a.width},
        {"downsamples", a.downsamples},
        {"residual_blocks", a.residual_blocks},
        {"disc_width", a.disc_width},
        {"disc_layers", a.disc_layers},
        {"instance_norm", a.instance_norm}}},
      {"seed", seed},
  };
}

GanTrainConfig GanTrainConfig::from_json(const nlohmann::json& doc) {
  GanTrainConfig c;
  FieldReader fields(doc, "gan config");
  std::string adversarial(to_string(c.adversarial));
  fields.read("image_size", c.image_size)
      .read("latent_dim", c.latent_dim)
      .read("steps", c.steps)
      .read("batch_size", c.batch_size)
      .read("lr_generator", c.lr_generator)
      .read("lr_discriminator", c.lr_discriminator)
      .read("beta1", c.beta1)
      .read("beta2", c.beta2)
      .read("n_critic", c.n_critic)
      .read("clip_value", c.clip_value)
      .read("identity_generator", c.identity_generator)
      .read("seed", c.seed)
      .read("adversarial", adversarial);
  c.adversarial = parse_adversarial_loss(adversarial);
  if (const auto* w = fields.child("loss_weights")) {
    FieldReader(*w, "gan config loss_weights")
        .read("adversarial", c.loss_weights.adversarial)
        .read("classification", c.loss_weights.classification)
        .read("reconstruction", c.loss_weights.reconstruction)
        .finish();
  }
  if (const auto* a = fields.child("architecture")) {
    FieldReader(*a, "gan config architecture")
        .read("width", c.architecture.width)
        .read("downsamples", c.architecture.downsamples)
        .read("residual_blocks", c.architecture.residual_blocks)
        .read("disc_width", c.architecture.disc_width)
        .read("disc_layers", c.architecture.disc_layers)
        .read("instance_norm", c.architecture.instance_norm)
        .finish();
  }
  fields.finish();
  c.validate();
  return c;
}

std::string GanTrainConfig::digest() const { return sha256_hex(to_json().dump()); }

template <typename T>
std::vector<nn::Param<T>*> TranslatorNets<T>::discriminator_params() {
  std::vector<nn::Param<T>*> out = disc_trunk.params();
  for (auto* p : disc_src.params()) out.push_back(p);
  for (auto* p : disc_cls.params()) out.push_back(p);
  return out;
}

template <typename T>
void TranslatorNets<T>::zero_grad() {
  generator.zero_grad();
  disc_trunk.zero_grad();
  disc_src.zero_grad();
  disc_cls.zero_grad();
}

template <typename T>
std::size_t TranslatorNets<T>::parameter_count() const {
  return generator.parameter_count() + disc_trunk.parameter_count() + disc_src.parameter_count() +
         disc_cls.parameter_count();
}

template <typename T>
TranslatorNets<T> build_translator(const TranslatorArchitecture& arch, std::size_t image_size,
                                   bool identity_generator, std::uint64_t seed) {
  if (image_size == 0 || (image_size >> arch.disc_layers) == 0 ||
      image_size % (std::size_t{1} << arch.downsamples) != 0) {
    throw ConfigError("translator: image size " + std::to_string(image_size) + " does not fit the architecture");
  }
  TranslatorNets<T> nets;
  nets.image_size = image_size;
  nets.identity_generator = identity_generator;

  auto norm_act = [&](nn::Sequential<T>& s, std::size_t channels, bool activate) {
    if (arch.instance_norm) s.template emplace<nn::InstanceNorm>(channels);
    if (activate) s.template emplace<nn::ReLU>();
  };

  if (!identity_generator) {
    auto& g = nets.generator;
    std::size_t c = arch.width;
    g.template emplace<nn::Conv2d>(kConditionChannels, c, 3, 1, 1);
    norm_act(g, c, true);
    for (std::size_t i = 0; i < arch.downsamples; ++i) {
      g.template emplace<nn::Conv2d>(c, 2 * c, 4, 2, 1);
      c *= 2;
      norm_act(g, c, true);
    }
    for (std::size_t i = 0; i < arch.residual_blocks; ++i) {
      nn::Sequential<T> body;
      body.template emplace<nn::Conv2d>(c, c, 3, 1, 1);
      norm_act(body, c, true);
      body.template emplace<nn::Conv2d>(c, c, 3, 1, 1);
      norm_act(body, c, false);
      g.template emplace<nn::Residual>(std::move(body));
    }
    for (std::size_t i = 0; i < arch.downsamples; ++i) {
      g.template emplace<nn::Upsample2d>(2);
      g.template emplace<nn::Conv2d>(c, c / 2, 3, 1, 1);
      c /= 2;
      norm_act(g, c, true);
    }
    g.template emplace<nn::Conv2d>(c, 2, 3, 1, 1);
  }

  std::size_t c_in = 1, c_out = arch.disc_width, side = image_size;
  for (std::size_t i = 0; i < arch.disc_layers; ++i) {
    nets.disc_trunk.template emplace<nn::Conv2d>(c_in, c_out, 4, 2, 1);
    nets.disc_trunk.template emplace<nn::LeakyReLU>(0.2);
    c_in = c_out;
    c_out *= 2;
    side /= 2;
  }
  nets.disc_trunk.template emplace<nn::Flatten>();
  const std::size_t features = c_in * side * side;
  nets.disc_src.template emplace<nn::Dense>(features, 1);
  nets.disc_cls.template emplace<nn::Dense>(features, kNumEmotions);

  Rng rng = Rng::derive(seed, 0x6e657473);
  nets.generator.reset_parameters(rng);
  nets.disc_trunk.reset_parameters(rng);
  nets.disc_src.reset_parameters(rng);
  nets.disc_cls.reset_parameters(rng);
  return nets;
}

template <typename T>
Tensor<T> generator_forward(const TranslatorNets<T>& nets, const Tensor<T>& images, std::span<const int> targets) {
  return run_generator(nets, images, targets, false).output;
}

template <typename T>
LossBreakdown<T> translator_losses(TranslatorNets<T>& nets, const Tensor<T>& images, std::span<const int> sources,
                                   std::span<const int> targets, const LossWeights& weights, AdversarialLoss adversarial,
                                   bool backprop) {
  check_batch(nets, images, sources, targets);
  const Tensor<T> x = to_signed(images);
  const GeneratorPass<T> fake = run_generator(nets, x, targets, backprop);
  const DiscriminatorPass<T> judged = run_discriminator(nets, fake.output, backprop);
  const GeneratorPass<T> cycle = run_generator(nets, fake.output, sources, backprop);

  nn::LossResult<T> adv = adversarial_term(judged.realness, true, adversarial);
  nn::LossResult<T> cls = nn::softmax_cross_entropy(judged.logits, targets);
  nn::LossResult<T> rec = nn::mean_absolute_error(cycle.output, x);

  LossBreakdown<T> out{adv.value, cls.value, rec.value};
  if (!backprop) return out;

  rec.grad *= static_cast<T>(weights.reconstruction);
  adv.grad *= static_cast<T>(weights.adversarial);
  cls.grad *= static_cast<T>(weights.classification);
  Tensor<T> grad_fake = backward_generator(nets, cycle, rec.grad);
  grad_fake += backward_discriminator(nets, judged, adv.grad, cls.grad);
  backward_generator(nets, fake, grad_fake);
  return out;
}

template <typename T>
LossBreakdown<T> discriminator_losses(TranslatorNets<T>& nets, const Tensor<T>& images, std::span<const int> sources,
                                      std::span<const int> targets, const LossWeights& weights,
                                      AdversarialLoss adversarial, bool backprop) {
  check_batch(nets, images, sources, targets);
  const Tensor<T> x = to_signed(images);
  const Tensor<T> fake = run_generator(nets, x, targets, false).output;
  const DiscriminatorPass<T> on_real = run_discriminator(nets, x, backprop);
  const DiscriminatorPass<T> on_fake = run_discriminator(nets, fake, backprop);

  nn::LossResult<T> adv_real = adversarial_term(on_real.realness, true, adversarial);
  nn::LossResult<T> adv_fake = adversarial_term(on_fake.realness, false, adversarial);
  nn::LossResult<T> cls = nn::softmax_cross_entropy(on_real.logits, sources);

  LossBreakdown<T> out{adv_real.value + adv_fake.value, cls.value, T{0}};
  if (!backprop) return out;

  const T wa = static_cast<T>(weights.adversarial);
  adv_real.grad *= wa;
  adv_fake.grad *= wa;
  cls.grad *= static_cast<T>(weights.classification);
  backward_discriminator(nets, on_real, adv_real.grad, cls.grad);
  backward_discriminator(nets, on_fake, adv_fake.grad, Tensor<T>(on_fake.logits.shape()));
  return out;
}

template struct TranslatorNets<float>;
template struct TranslatorNets<double>;
template TranslatorNets<float> build_translator<float>(const TranslatorArchitecture&, std::size_t, bool,
                                                       std::uint64_t);
template TranslatorNets<double> build_translator<double>(const TranslatorArchitecture&, std::size_t, bool,
                                                         std::uint64_t);
template Tensor<float> generator_forward<float>(const TranslatorNets<float>&, const Tensor<float>&,
                                                std::span<const int>);
template Tensor<double> generator_forward<double>(const TranslatorNets<double>&, const Tensor<double>&,
                                                  std::span<const int>);
template LossBreakdown<float> translator_losses<float>(TranslatorNets<float>&, const Tensor<float>&,
                                                      std::span<const int>, std::span<const int>, const LossWeights&,
                                                      AdversarialLoss, bool);
template LossBreakdown<double> translator_losses<double>(TranslatorNets<double>&, const Tensor<double>&,
                                                        std::span<const int>, std::span<const int>,
                                                        const LossWeights&, AdversarialLoss, bool);
template LossBreakdown<float> discriminator_losses<float>(TranslatorNets<float>&, const Tensor<float>&,
                                                          std::span<const int>, std::span<const int>,
                                                          const LossWeights&, AdversarialLoss, bool);
template LossBreakdown<double> discriminator_losses<double>(TranslatorNets<double>&, const Tensor<double>&,
                                                            std::span<const int>, std::span<const int>,
                                                            const LossWeights&, AdversarialLoss, bool);

TranslatorCheckpoint initial_checkpoint(const GanTrainConfig& config) {
  config.validate();
  TranslatorCheckpoint ckpt;
  ckpt.config = config;
  ckpt.nets = build_translator<float>(config.architecture, config.image_size, config.identity_generator, config.seed);
  ckpt.step = 0;
  ckpt.config_digest = config.digest();
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const TranslatorCheckpoint& checkpoint) {
  nn::Archive archive;
  archive.metadata["kind"] = kCheckpointKind;
  archive.metadata["step"] = checkpoint.step;
  archive.metadata["config"] = checkpoint.config.to_json();
  archive.metadata["config_digest"] = checkpoint.config_digest;
  archive.metadata["identity_map"] = checkpoint.nets.identity_generator;
  nn::store_network(archive, "generator", checkpoint.nets.generator);
  nn::store_network(archive, "disc_trunk", checkpoint.nets.disc_trunk);
  nn::store_network(archive, "disc_src", checkpoint.nets.disc_src);
  nn::store_network(archive, "disc_cls", checkpoint.nets.disc_cls);
  nn::write_archive(path, archive);
}

TranslatorCheckpoint load_translator_checkpoint(const std::filesystem::path& path) {
  const nn::Archive archive = nn::read_archive(path);
  const auto& meta = archive.metadata;
  if (meta.value("kind", std::string()) != kCheckpointKind) {
    throw DataError(path.string() + ": not a translator checkpoint");
  }
  TranslatorCheckpoint ckpt;
  try {
    ckpt.config = GanTrainConfig::from_json(meta.at("config"));
    ckpt.step = meta.at("step").get<std::size_t>();
    ckpt.config_digest = meta.at("config_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint metadata: " + e.what());
  }
  ckpt.config.validate();
  if (ckpt.config_digest != ckpt.config.digest()) {
    throw DataError(path.string() + ": config digest does not match the embedded config");
  }
  const TranslatorNets<float> expected = build_translator<float>(
      ckpt.config.architecture, ckpt.config.image_size, ckpt.config.identity_generator, 0);
  ckpt.nets.image_size = ckpt.config.image_size;
  ckpt.nets.identity_generator = ckpt.config.identity_generator;
  ckpt.nets.generator = nn::load_network(archive, "generator");
  ckpt.nets.disc_trunk = nn::load_network(archive, "disc_trunk");
  ckpt.nets.disc_src = nn::load_network(archive, "disc_src");
  ckpt.nets.disc_cls = nn::load_network(archive, "disc_cls");
  if (ckpt.nets.generator.describe() != expected.generator.describe() ||
      ckpt.nets.disc_trunk.describe() != expected.disc_trunk.describe() ||
      ckpt.nets.disc_src.describe() != expected.disc_src.describe() ||
      ckpt.nets.disc_cls.describe() != expected.disc_cls.describe()) {
    throw ShapeError(path.string() + ": stored networks do not match the architecture of the embedded config");
  }
  return ckpt;
}

std::vector<ImageTensor> translate_batch(const TranslatorCheckpoint& checkpoint, std::span<const ImageTensor> images,
                                         std::span<const Emotion> targets) {
  if (images.size() != targets.size()) throw ShapeError("translate: image and target counts differ");
  if (images.empty()) return {};
  const std::size_t size = checkpoint.nets.image_size;
  const Tensor<float> x = to_signed(image_batch(images, size));
  std::vector<int> labels;
  for (Emotion e : targets) labels.push_back(index_of(e));
  const Tensor<float> y = generator_forward(checkpoint.nets, x, labels);
  std::vector<ImageTensor> out;
  const std::size_t plane = size * size;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::vector<float> px(y.data() + i * plane, y.data() + (i + 1) * plane);
    for (auto& v : px) v = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
    out.emplace_back(size, size, 1, std::move(px));
  }
  return out;
}

ImageTensor translate(const TranslatorCheckpoint& checkpoint, const ImageTensor& image, const DomainCode& target) {
  const Emotion e = target.emotion();
  return translate_batch(checkpoint, std::span(&image, 1), std::span(&e, 1)).front();
}

ImageTensor translate(const TranslatorCheckpoint& checkpoint, const ImageTensor& image,
                      std::span<const float> target_one_hot) {
  return translate(checkpoint, image, DomainCode::from_values(target_one_hot));
}

std::vector<data::LabeledFace> synthesize_expression_set(const TranslatorCheckpoint& checkpoint,
                                                         const ImageTensor& identity_image,
                                                         const std::string& identity_id,
                                                         const std::string& source_db) {
  if (identity_id.empty()) throw DataError("synthesize_expression_set: empty identity id");
  const std::vector<ImageTensor> inputs(kNumEmotions, identity_image);
  const std::vector<ImageTensor> outputs = translate_batch(checkpoint, inputs, kAllEmotions);
  std::vector<data::LabeledFace> faces;
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    data::LabeledFace f;
    f.image = outputs[i];
    f.emotion = kAllEmotions[i];
    f.identity_id = identity_id;
    f.provenance = data::Provenance::kGenerated;
    f.source_db = source_db;
    faces.push_back(std::move(f));
  }
  return faces;
}

std::vector<DiscriminatorOutput> discriminator_forward(const TranslatorCheckpoint& checkpoint,
                                                       std::span<const ImageTensor> images) {
  if (images.empty()) return {};
  const Tensor<float> x = to_signed(image_batch(images, checkpoint.nets.image_size));
  const DiscriminatorPass<float> pass = run_discriminator(checkpoint.nets, x, false);
  std::vector<DiscriminatorOutput> out(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    out[i].realness = pass.realness[i];
    for (std::size_t c = 0; c < kNumEmotions; ++c) out[i].class_logits[c] = pass.logits[i * kNumEmotions + c];
  }
  return out;
}

TranslatorCheckpoint train_translator(const data::FaceDataset& dataset, const GanTrainConfig& config,
                                      const TranslatorTrainOptions& options) {
  config.validate();
  if (dataset.empty()) throw DataError("train_translator: empty dataset");
  std::set<Emotion> classes;
  for (const auto& r : dataset.records()) classes.insert(r.emotion);
  if (classes.size() < 2) throw DataError("train_translator: dataset needs at least 2 emotion classes");

  const std::size_t size = config.image_size, plane = size * size, n = dataset.size();
  std::vector<float> pixels(n * plane);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    ImageTensor img = data::to_grayscale(dataset[i].image);
    if (img.height() != size || img.width() != size) img = data::resize_bilinear(img, size, size);
    std::transform(img.values().begin(), img.values().end(), pixels.begin() + static_cast<std::ptrdiff_t>(i * plane),
                   [](float v) { return std::clamp(v, 0.0f, 1.0f); });
    labels[i] = index_of(dataset[i].emotion);
  }

  TranslatorCheckpoint ckpt = initial_checkpoint(config);
  auto& nets = ckpt.nets;
  nn::Adam<float> opt_g(nets.generator_params(),
                        {config.lr_generator, config.beta1, config.beta2, 1e-8});
  nn::Adam<float> opt_d(nets.discriminator_params(),
                        {config.lr_discriminator, config.beta1, config.beta2, 1e-8});

  std::ofstream log, batches;
  if (!options.log_path.empty()) {
    log.open(options.log_path, std::ios::binary | std::ios::trunc);
    if (!log) throw DataError("cannot write training log " + options.log_path.string());
    log << "step,adversarial,classification,reconstruction,total\n";
  }
  if (!options.batch_manifest_path.empty()) {
    batches.open(options.batch_manifest_path, std::ios::binary | std::ios::trunc);
    if (!batches) throw DataError("cannot write batch manifest " + options.batch_manifest_path.string());
    batches << "step,indices\n";
  }

  Rng order_rng = Rng::derive(config.seed, 0x6f726465);
  Rng target_rng = Rng::derive(config.seed, 0x74617267);
  std::vector<std::size_t> order(n);
  std::size_t cursor = n;
  const std::size_t batch = std::min(config.batch_size, n);

  auto check = [](const LossBreakdown<float>& l, std::size_t step, const char* net) {
    for (float v : {l.adversarial, l.classification, l.reconstruction}) {
      if (!std::isfinite(v)) {
        throw TrainingError(std::string("train_translator: non-finite ") + net + " loss at step " +
                            std::to_string(step) + " (adversarial " + format_number(l.adversarial) +
                            ", classification " + format_number(l.classification) + ", reconstruction " +
                            format_number(l.reconstruction) + ")");
      }
    }
  };

  for (std::size_t step = 0; step < config.steps; ++step) {
    std::vector<std::size_t> picked;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == n) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        order_rng.shuffle(std::span(order));
        cursor = 0;
      }
      picked.push_back(order[cursor++]);
    }
    Tensor<float> x({batch, 1, size, size});
    std::vector<int> sources(batch), targets(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(picked[b] * plane), plane, x.data() + b * plane);
      sources[b] = labels[picked[b]];
      targets[b] = static_cast<int>(target_rng.below(kNumEmotions));
    }
    if (batches.is_open()) {
      batches << step << ',';
      for (std::size_t b = 0; b < batch; ++b) batches << (b ? " " : "") << picked[b];
      batches << '\n';
    }

    for (std::size_t k = 0; k < config.n_critic; ++k) {
      opt_d.zero_grad();
      const auto ld = discriminator_losses(nets, x, sources, targets, config.loss_weights, config.adversarial, true);
      check(ld, step, "discriminator");
      opt_d.step();
      if (config.adversarial == AdversarialLoss::kWassersteinClip) {
        const float c = static_cast<float>(config.clip_value);
        for (auto* p : nets.discriminator_params()) {
          for (auto& v : p->value.values()) v = std::clamp(v, -c, c);
        }
      }
    }

    opt_g.zero_grad();
    const auto lg = translator_losses(nets, x, sources, targets, config.loss_weights, config.adversarial,
                                      !config.identity_generator);
    check(lg, step, "generator");
    if (!config.identity_generator) opt_g.step();

    TranslatorStep record;
    record.step = step;
    record.losses = {lg.adversarial, lg.classification, lg.reconstruction};
    record.total = record.losses.total(config.loss_weights);
    if (log.is_open()) {
      log << step << ',' << format_number(record.losses.adversarial) << ','
          << format_number(record.losses.classification) << ',' << format_number(record.losses.reconstruction)
          << ',' << format_number(record.total) << '\n';
      log.flush();
    }
    if (options.on_step) options.on_step(record);
  }
  ckpt.step = config.steps;
  return ckpt;
}

}  // namespace fergan::gan
