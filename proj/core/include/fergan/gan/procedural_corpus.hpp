#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "fergan/data/dataset.hpp"
#include "fergan/gan/procedural_face.hpp"

namespace fergan::gan {

struct ProceduralCorpusOptions {
  std::size_t identities = 24;
  std::size_t image_size = 64;
  FaceStyle style = FaceStyle::kStudio;
  std::uint64_t seed = 0;
  /// Identity ids are <prefix><4-digit index>.
  std::string id_prefix = "toy";
  std::string source_db = "toy";
  data::Provenance provenance = data::Provenance::kReal;
};

/// Balanced in-memory corpus: every identity rendered once per emotion.
data::FaceDataset make_procedural_corpus(const ProceduralCorpusOptions& options);

}  // namespace fergan::gan
