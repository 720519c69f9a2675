#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "fergan/data/preprocess.hpp"
#include "fergan/image.hpp"

namespace fergan::data {

/// On-disk cache of preprocessed images keyed by source-file content hash and
/// preprocessing parameters. Entries are written atomically, so concurrent
/// processes sharing a cache directory never read torn files.
class PreprocessCache {
 public:
  explicit PreprocessCache(std::filesystem::path dir);

  static std::string key(const std::string& content_hash, const PreprocessOptions& options,
                         const std::optional<FaceBox>& box);

  std::optional<ImageTensor> get(const std::string& key) const;
  void put(const std::string& key, const ImageTensor& image) const;

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::size_t hits() const noexcept { return hits_; }

 private:
  std::filesystem::path dir_;
  mutable std::size_t hits_ = 0;
};

}  // namespace fergan::data
