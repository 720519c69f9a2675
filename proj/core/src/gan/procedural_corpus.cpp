#include "fergan/gan/procedural_corpus.hpp"

#include <cstdio>

#include "fergan/common/random.hpp"

namespace fergan::gan {

data::FaceDataset make_procedural_corpus(const ProceduralCorpusOptions& options) {
  data::FaceDataset out;
  for (std::size_t i = 0; i < options.identities; ++i) {
    Rng traits_rng = Rng::derive(options.seed, 2 * i);
    const IdentityTraits traits = random_traits(traits_rng, options.style);
    Rng expression_rng = Rng::derive(options.seed, 2 * i + 1);
    char id[32];
    std::snprintf(id, sizeof id, "%04zu", i);
    for (Emotion e : kAllEmotions) {
      data::LabeledFace face;
      face.image = render_face(traits, jittered_expression(e, traits, expression_rng), options.image_size);
      face.emotion = e;
      face.identity_id = options.id_prefix + id;
      face.provenance = options.provenance;
      face.source_db = options.source_db;
      out.add(std::move(face));
    }
  }
  return out;
}

}  // namespace fergan::gan
