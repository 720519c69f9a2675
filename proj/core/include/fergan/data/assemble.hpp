#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "fergan/data/dataset.hpp"
#include "fergan/gan/identity_source.hpp"
#include "fergan/gan/translator.hpp"

namespace fergan::data {

struct AssembleOptions {
  /// Side of the stored faces; translator output is resized to it.
  std::size_t output_size = 64;
  /// Identity ids are <prefix>s<seed>_<6-digit index>.
  std::string id_prefix = "gen";
  std::string source_db = "generated";
  std::function<void(std::size_t done, std::size_t total)> on_progress;
};

/// identity_count new identities from `source`, each expanded to all six
/// emotions by the translator. Latent i is LatentVector::sample(dim, seed, i).
FaceDataset assemble_generated(std::size_t identity_count, const gan::TranslatorCheckpoint& checkpoint,
                               const gan::IdentitySource& source, std::uint64_t seed,
                               const AssembleOptions& options = {});

}  // namespace fergan::data
