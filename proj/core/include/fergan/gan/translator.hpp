#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fergan/data/dataset.hpp"
#include "fergan/emotion.hpp"
#include "fergan/image.hpp"
#include "fergan/nn/sequential.hpp"

namespace fergan::gan {

/// Adversarial objective. kLeastSquares regresses realness to 1/0,
/// kLogistic is the non-saturating cross-entropy form, kWassersteinClip is a
/// critic with weight clipping.
enum class AdversarialLoss { kLeastSquares, kLogistic, kWassersteinClip };

AdversarialLoss parse_adversarial_loss(std::string_view text);
std::string_view to_string(AdversarialLoss loss);

struct LossWeights {
  double adversarial = 1.0;
  double classification = 1.0;
  double reconstruction = 10.0;
};

/// Shape of the generator and the dual-head discriminator.
///
/// Generator: conv3 -> `downsamples` stride-2 conv4 (doubling width) ->
/// `residual_blocks` residual blocks -> matching nearest-upsample + conv3
/// stages -> conv3 to two maps (blend mask, colour). The image channel is
/// concatenated with six constant one-hot planes on input.
///
/// Discriminator: `disc_layers` stride-2 conv4 + LeakyReLU, flattened, then a
/// one-unit realness head and a six-unit class head.
struct TranslatorArchitecture {
  std::size_t width = 16;
  std::size_t downsamples = 2;
  std::size_t residual_blocks = 3;
  std::size_t disc_width = 16;
  std::size_t disc_layers = 3;
  bool instance_norm = true;
};

struct GanTrainConfig {
  std::size_t image_size = 32;
  std::size_t latent_dim = 64;
  std::size_t steps = 2000;
  std::size_t batch_size = 16;
  double lr_generator = 1e-4;
  double lr_discriminator = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  LossWeights loss_weights;
  AdversarialLoss adversarial = AdversarialLoss::kLeastSquares;
  /// Discriminator updates per generator update.
  std::size_t n_critic = 1;
  /// Only used by kWassersteinClip.
  double clip_value = 0.01;
  /// Generator replaced by the identity map on the image (no parameters).
  bool identity_generator = false;
  TranslatorArchitecture architecture;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static GanTrainConfig from_json(const nlohmann::json& doc);
  /// SHA-256 of the canonical JSON form.
  std::string digest() const;
};

template <typename T>
struct TranslatorNets {
  std::size_t image_size = 0;
  bool identity_generator = false;
  nn::Sequential<T> generator;
  nn::Sequential<T> disc_trunk;
  nn::Sequential<T> disc_src;
  nn::Sequential<T> disc_cls;

  std::vector<nn::Param<T>*> generator_params() { return generator.params(); }
  std::vector<nn::Param<T>*> discriminator_params();
  void zero_grad();
  std::size_t parameter_count() const;
};

/// Builds freshly initialised networks. No config validation, so tests can
/// build tiny nets at sizes below the training minimum.
template <typename T>
TranslatorNets<T> build_translator(const TranslatorArchitecture& arch, std::size_t image_size,
                                   bool identity_generator, std::uint64_t seed);

/// Generator forward on [N, 1, H, W] images in [-1, 1].
template <typename T>
nn::Tensor<T> generator_forward(const TranslatorNets<T>& nets, const nn::Tensor<T>& images,
                                std::span<const int> targets);

struct DiscriminatorOutput {
  double realness = 0.0;
  std::array<double, kNumEmotions> class_logits{};
};

template <typename T>
struct LossBreakdown {
  T adversarial{};
  T classification{};
  T reconstruction{};
  T total(const LossWeights& w) const {
    return static_cast<T>(w.adversarial) * adversarial + static_cast<T>(w.classification) * classification +
           static_cast<T>(w.reconstruction) * reconstruction;
  }
};

/// Generator objective on a batch of [N, 1, H, W] images in [0, 1]: the
/// adversarial term on translated images, cross-entropy of the
/// discriminator's class head against `targets`, and the L1 cycle loss of
/// translating back to `sources`. With `backprop`, accumulates the gradient of
/// the weighted total into every parameter (discriminator included; callers
/// zero those before the discriminator update).
template <typename T>
LossBreakdown<T> translator_losses(TranslatorNets<T>& nets, const nn::Tensor<T>& images, std::span<const int> sources,
                                   std::span<const int> targets, const LossWeights& weights, AdversarialLoss adversarial,
                                   bool backprop);

/// Discriminator objective: adversarial real-vs-translated term plus
/// cross-entropy of the class head on real images; reconstruction is 0.
template <typename T>
LossBreakdown<T> discriminator_losses(TranslatorNets<T>& nets, const nn::Tensor<T>& images,
                                      std::span<const int> sources, std::span<const int> targets,
                                      const LossWeights& weights, AdversarialLoss adversarial, bool backprop);

extern template struct TranslatorNets<float>;
extern template struct TranslatorNets<double>;

struct TranslatorCheckpoint {
  GanTrainConfig config;
  TranslatorNets<float> nets;
  std::size_t step = 0;
  std::string config_digest;
};

/// Checkpoint with freshly initialised weights at step 0.
TranslatorCheckpoint initial_checkpoint(const GanTrainConfig& config);

void save_checkpoint(const std::filesystem::path& path, const TranslatorCheckpoint& checkpoint);
/// Throws DataError when the file is not a translator checkpoint or its
/// recorded digest disagrees with the embedded config.
TranslatorCheckpoint load_translator_checkpoint(const std::filesystem::path& path);

/// Re-renders `image` (image_size^2 x 1, in [0, 1]) with the target
/// expression. Output has the input's shape and stays in [0, 1].
ImageTensor translate(const TranslatorCheckpoint& checkpoint, const ImageTensor& image, const DomainCode& target);
/// Same, with the target given as raw one-hot values (validated).
ImageTensor translate(const TranslatorCheckpoint& checkpoint, const ImageTensor& image,
                      std::span<const float> target_one_hot);
std::vector<ImageTensor> translate_batch(const TranslatorCheckpoint& checkpoint, std::span<const ImageTensor> images,
                                         std::span<const Emotion> targets);

/// One generated face per emotion, all tagged with `identity_id`.
std::vector<data::LabeledFace> synthesize_expression_set(const TranslatorCheckpoint& checkpoint,
                                                         const ImageTensor& identity_image,
                                                         const std::string& identity_id,
                                                         const std::string& source_db = "generated");

std::vector<DiscriminatorOutput> discriminator_forward(const TranslatorCheckpoint& checkpoint,
                                                       std::span<const ImageTensor> images);

struct TranslatorStep {
  std::size_t step = 0;
  LossBreakdown<double> losses;
  double total = 0.0;
};

struct TranslatorTrainOptions {
  /// CSV: step,adversarial,classification,reconstruction,total. Row s holds
  /// the generator losses measured before update s.
  std::filesystem::path log_path;
  /// CSV: step,indices (space-separated dataset record indices).
  std::filesystem::path batch_manifest_path;
  std::function<void(const TranslatorStep&)> on_step;
};

/// Trains on every record of `dataset`, resized to config.image_size when
/// needed. Throws DataError for an empty or single-emotion dataset and
/// TrainingError when a loss turns non-finite.
TranslatorCheckpoint train_translator(const data::FaceDataset& dataset, const GanTrainConfig& config,
                                      const TranslatorTrainOptions& options = {});

}  // namespace fergan::gan
