#include "fergan/data/assemble.hpp"

#include <algorithm>
#include <cstdio>

#include "fergan/data/preprocess.hpp"

namespace fergan::data {

FaceDataset assemble_generated(std::size_t identity_count, const gan::TranslatorCheckpoint& checkpoint,
                               const gan::IdentitySource& source, std::uint64_t seed,
                               const AssembleOptions& options) {
  if (identity_count == 0) throw ConfigError("assemble_generated: identity_count must be positive");
  const std::size_t size = checkpoint.config.image_size;
  const std::size_t latent_dim = std::max<std::size_t>(source.latent_dim(), 1);
  FaceDataset out;
  for (std::size_t i = 0; i < identity_count; ++i) {
    const gan::LatentVector latent = gan::LatentVector::sample(latent_dim, seed, i);
    ImageTensor face = gan::generate_identity(source, latent);
    if (face.height() != size || face.width() != size || face.channels() != 1) {
      face = preprocess(face, std::nullopt, {size, 1.0});
    }
    char suffix[48];
    std::snprintf(suffix, sizeof suffix, "s%llu_%06zu", static_cast<unsigned long long>(seed), i);
    for (LabeledFace& f : gan::synthesize_expression_set(checkpoint, face, options.id_prefix + suffix,
                                                          options.source_db)) {
      f.image = preprocess(f.image, std::nullopt, {options.output_size, 1.0});
      out.add(std::move(f));
    }
    if (options.on_progress) options.on_progress(i + 1, identity_count);
  }
  return out;
}

}  // namespace fergan::data
