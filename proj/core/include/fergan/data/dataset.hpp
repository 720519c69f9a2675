#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "fergan/data/preprocess.hpp"
#include "fergan/emotion.hpp"
#include "fergan/image.hpp"

namespace fergan::data {

enum class Provenance { kReal, kGenerated };

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view text);

struct LabeledFace {
  ImageTensor image;
  Emotion emotion = Emotion::kAnger;
  std::string identity_id;
  Provenance provenance = Provenance::kReal;
  std::string source_db;
  /// Absolute path of the image on disk; empty for faces that only exist in memory.
  std::filesystem::path path;
  std::optional<FaceBox> face_box;
};

/// Records plus an identity index. Identities are kept in first-appearance
/// order, which is the order every split, mix, and manifest follows.
class FaceDataset {
 public:
  /// Throws DataError on an empty identity, non-finite pixels, or a duplicate
  /// (identity, emotion, provenance, source_db) tuple.
  void add(LabeledFace face);

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::vector<LabeledFace>& records() const noexcept { return records_; }
  const LabeledFace& operator[](std::size_t i) const { return records_[i]; }

  const std::vector<std::string>& identities() const noexcept { return identity_order_; }
  std::size_t identity_count() const noexcept { return identity_order_.size(); }
  bool contains_identity(const std::string& id) const { return index_.contains(id); }
  /// Record indices of an identity, in insertion order.
  const std::vector<std::size_t>& indices_of(const std::string& id) const;
  const std::map<std::string, std::vector<std::size_t>>& identity_index() const noexcept { return index_; }

  /// Records of the given identities, grouped in the order the ids are listed.
  FaceDataset subset(std::span<const std::string> ids) const;

  /// Appends every record of `other`.
  void append(const FaceDataset& other);

 private:
  using Key = std::tuple<std::string, int, int, std::string>;

  std::vector<LabeledFace> records_;
  std::vector<std::string> identity_order_;
  std::map<std::string, std::vector<std::size_t>> index_;
  std::set<Key> keys_;
};

}  // namespace fergan::data
