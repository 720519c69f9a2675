#include "fergan/data/dataset.hpp"

#include "fergan/common/error.hpp"

namespace fergan::data {

std::string_view to_string(Provenance p) { return p == Provenance::kReal ? "real" : "generated"; }

std::optional<Provenance> parse_provenance(std::string_view text) {
  if (text == "real") return Provenance::kReal;
  if (text == "generated") return Provenance::kGenerated;
  return std::nullopt;
}

void FaceDataset::add(LabeledFace face) {
  if (face.identity_id.empty()) throw DataError("face record has an empty identity id");
  if (!face.image.all_finite()) throw DataError("face record for '" + face.identity_id + "' has non-finite pixels");
  Key key{face.identity_id, index_of(face.emotion), static_cast<int>(face.provenance), face.source_db};
  if (!keys_.insert(key).second) {
    throw DataError("duplicate record: identity '" + face.identity_id + "', emotion " +
                    std::string(fergan::to_string(face.emotion)) + ", " + std::string(to_string(face.provenance)) +
                    ", source '" + face.source_db + "'");
  }
  auto [it, inserted] = index_.try_emplace(face.identity_id);
  if (inserted) identity_order_.push_back(face.identity_id);
  it->second.push_back(records_.size());
  records_.push_back(std::move(face));
}

const std::vector<std::size_t>& FaceDataset::indices_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown identity: " + id);
  return it->second;
}

FaceDataset FaceDataset::subset(std::span<const std::string> ids) const {
  FaceDataset out;
  for (const auto& id : ids) {
    for (const std::size_t i : indices_of(id)) out.add(records_[i]);
  }
  return out;
}

void FaceDataset::append(const FaceDataset& other) {
  for (const auto& r : other.records_) add(r);
}

}  // namespace fergan::data
