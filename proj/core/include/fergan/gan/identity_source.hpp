#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "fergan/data/dataset.hpp"
#include "fergan/gan/latent.hpp"
#include "fergan/gan/procedural_face.hpp"
#include "fergan/image.hpp"
#include "fergan/nn/sequential.hpp"

namespace fergan::gan {

enum class IdentitySourceKind { kGenerativeModel, kCorpusSampler, kProcedural };

/// Accepts "generative-model", "corpus-sampler", "procedural"; anything else
/// is a ConfigError.
IdentitySourceKind parse_identity_source_kind(std::string_view text);
std::string_view to_string(IdentitySourceKind kind);

/// Produces a face of a new subject from a latent vector. Implementations are
/// deterministic in (source state, latent).
class IdentitySource {
 public:
  virtual ~IdentitySource() = default;
  virtual IdentitySourceKind kind() const = 0;
  virtual std::size_t latent_dim() const = 0;
  virtual std::size_t image_size() const = 0;
  /// Called by generate_identity() after the latent length has been checked.
  virtual ImageTensor generate(const LatentVector& latent) const = 0;
};

/// Cartoon faces: the latent's fingerprint seeds the identity traits and a
/// random starting expression.
class ProceduralIdentitySource final : public IdentitySource {
 public:
  ProceduralIdentitySource(std::size_t latent_dim, std::size_t image_size, FaceStyle style = FaceStyle::kStudio);
  IdentitySourceKind kind() const override { return IdentitySourceKind::kProcedural; }
  std::size_t latent_dim() const override { return latent_dim_; }
  std::size_t image_size() const override { return image_size_; }
  ImageTensor generate(const LatentVector& latent) const override;

 private:
  std::size_t latent_dim_, image_size_;
  FaceStyle style_;
};

/// Picks one image of an existing corpus; the latent only acts as a selection
/// seed, so any length is accepted. Images are resized to image_size.
class CorpusSampler final : public IdentitySource {
 public:
  /// Throws DataError for an empty corpus.
  CorpusSampler(data::FaceDataset corpus, std::size_t image_size);
  IdentitySourceKind kind() const override { return IdentitySourceKind::kCorpusSampler; }
  std::size_t latent_dim() const override { return 0; }
  std::size_t image_size() const override { return image_size_; }
  ImageTensor generate(const LatentVector& latent) const override;

 private:
  data::FaceDataset corpus_;
  std::size_t image_size_;
};

/// Pretrained latent-to-image network loaded from an archive. The network maps
/// [N, latent_dim] to N * image_size^2 values in [-1, 1].
class GenerativeModelSource final : public IdentitySource {
 public:
  explicit GenerativeModelSource(const std::filesystem::path& archive_path);
  GenerativeModelSource(nn::Sequential<float> network, std::size_t latent_dim, std::size_t image_size);
  IdentitySourceKind kind() const override { return IdentitySourceKind::kGenerativeModel; }
  std::size_t latent_dim() const override { return latent_dim_; }
  std::size_t image_size() const override { return image_size_; }
  ImageTensor generate(const LatentVector& latent) const override;

 private:
  nn::Sequential<float> network_;
  std::size_t latent_dim_, image_size_;
};

/// Writes an archive readable by GenerativeModelSource.
void save_identity_generator(const std::filesystem::path& path, const nn::Sequential<float>& network,
                             std::size_t latent_dim, std::size_t image_size);

struct IdentitySourceConfig {
  std::string kind = "procedural";
  std::size_t latent_dim = 64;
  std::size_t image_size = 32;
  FaceStyle style = FaceStyle::kStudio;
  /// corpus-sampler only.
  std::filesystem::path corpus_manifest;
  /// generative-model only.
  std::filesystem::path model_path;
};

std::unique_ptr<IdentitySource> make_identity_source(const IdentitySourceConfig& config);

/// Validates the latent against the source (length must equal latent_dim
/// unless the source is a corpus sampler) and returns its face.
ImageTensor generate_identity(const IdentitySource& source, const LatentVector& latent);

}  // namespace fergan::gan
