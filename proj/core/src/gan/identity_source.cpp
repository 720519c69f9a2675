#include "fergan/gan/identity_source.hpp"

#include <algorithm>

#include "fergan/common/random.hpp"
#include "fergan/data/manifest.hpp"
#include "fergan/data/preprocess.hpp"
#include "fergan/nn/archive.hpp"

namespace fergan::gan {

namespace {
constexpr const char* kGeneratorKind = "fergan.identity_generator";
constexpr const char* kNetworkName = "latent_generator";
}  // namespace

IdentitySourceKind parse_identity_source_kind(std::string_view text) {
  if (text == "generative-model") return IdentitySourceKind::kGenerativeModel;
  if (text == "corpus-sampler") return IdentitySourceKind::kCorpusSampler;
  if (text == "procedural") return IdentitySourceKind::kProcedural;
  throw ConfigError("unknown identity source '" + std::string(text) +
                    "' (expected generative-model, corpus-sampler, or procedural)");
}

std::string_view to_string(IdentitySourceKind kind) {
  switch (kind) {
    case IdentitySourceKind::kGenerativeModel: return "generative-model";
    case IdentitySourceKind::kCorpusSampler: return "corpus-sampler";
    case IdentitySourceKind::kProcedural: return "procedural";
  }
  return "procedural";
}

ProceduralIdentitySource::ProceduralIdentitySource(std::size_t latent_dim, std::size_t image_size, FaceStyle style)
    : latent_dim_(latent_dim), image_size_(image_size), style_(style) {
  if (latent_dim == 0) throw ConfigError("procedural identity source: latent_dim must be positive");
  if (image_size < 8) throw ConfigError("procedural identity source: image_size must be at least 8");
}

ImageTensor ProceduralIdentitySource::generate(const LatentVector& latent) const {
  Rng rng(mix_seed(latent.fingerprint()));
  const IdentityTraits traits = random_traits(rng, style_);
  const Emotion start = kAllEmotions[rng.below(kNumEmotions)];
  return render_face(traits, jittered_expression(start, traits, rng), image_size_);
}

CorpusSampler::CorpusSampler(data::FaceDataset corpus, std::size_t image_size)
    : corpus_(std::move(corpus)), image_size_(image_size) {
  if (corpus_.empty()) throw DataError("corpus sampler: corpus is empty");
  if (image_size == 0) throw ConfigError("corpus sampler: image_size must be positive");
}

ImageTensor CorpusSampler::generate(const LatentVector& latent) const {
  const std::size_t index = mix_seed(latent.fingerprint()) % corpus_.size();
  return data::preprocess(corpus_[index].image, std::nullopt, {image_size_, 1.0});
}

GenerativeModelSource::GenerativeModelSource(nn::Sequential<float> network, std::size_t latent_dim,
                                             std::size_t image_size)
    : network_(std::move(network)), latent_dim_(latent_dim), image_size_(image_size) {
  if (latent_dim == 0 || image_size == 0) throw ConfigError("generative model: dimensions must be positive");
  const nn::Shape out = network_.output_shape({latent_dim});
  if (nn::numel(out) != image_size * image_size) {
    throw ShapeError("generative model: network emits " + nn::to_string(out) + ", expected " +
                     std::to_string(image_size * image_size) + " values");
  }
}

GenerativeModelSource::GenerativeModelSource(const std::filesystem::path& archive_path) : latent_dim_(0), image_size_(0) {
  const nn::Archive archive = nn::read_archive(archive_path);
  if (archive.metadata.value("kind", std::string()) != kGeneratorKind) {
    throw DataError(archive_path.string() + ": not an identity generator archive");
  }
  *this = GenerativeModelSource(nn::load_network(archive, kNetworkName),
                                archive.metadata.at("latent_dim").get<std::size_t>(),
                                archive.metadata.at("image_size").get<std::size_t>());
}

ImageTensor GenerativeModelSource::generate(const LatentVector& latent) const {
  const nn::Tensor<float> z({1, latent_dim_}, latent.values());
  const nn::Tensor<float> y = network_.infer(z);
  std::vector<float> px(y.values().begin(), y.values().end());
  for (auto& v : px) v = std::clamp((v + 1.0f) * 0.5f, 0.0f, 1.0f);
  return ImageTensor(image_size_, image_size_, 1, std::move(px));
}

void save_identity_generator(const std::filesystem::path& path, const nn::Sequential<float>& network,
                             std::size_t latent_dim, std::size_t image_size) {
  GenerativeModelSource check(network, latent_dim, image_size);
  nn::Archive archive;
  archive.metadata["kind"] = kGeneratorKind;
  archive.metadata["latent_dim"] = latent_dim;
  archive.metadata["image_size"] = image_size;
  nn::store_network(archive, kNetworkName, network);
  nn::write_archive(path, archive);
}

std::unique_ptr<IdentitySource> make_identity_source(const IdentitySourceConfig& config) {
  switch (parse_identity_source_kind(config.kind)) {
    case IdentitySourceKind::kProcedural:
      return std::make_unique<ProceduralIdentitySource>(config.latent_dim, config.image_size, config.style);
    case IdentitySourceKind::kCorpusSampler:
      return std::make_unique<CorpusSampler>(data::load_corpus(config.corpus_manifest), config.image_size);
    case IdentitySourceKind::kGenerativeModel:
      return std::make_unique<GenerativeModelSource>(config.model_path);
  }
  throw ConfigError("unknown identity source");
}

ImageTensor generate_identity(const IdentitySource& source, const LatentVector& latent) {
  if (source.kind() != IdentitySourceKind::kCorpusSampler && latent.size() != source.latent_dim()) {
    throw ShapeError("identity source expects a latent of length " + std::to_string(source.latent_dim()) + ", got " +
                     std::to_string(latent.size()));
  }
  return source.generate(latent);
}

}  // namespace fergan::gan
