#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "fergan/data/dataset.hpp"

namespace fergan::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("fergan-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
             std::to_string(rd() % 100000));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Balanced in-memory dataset: `identities` ids named <prefix><i>, one small
/// constant image per emotion.
inline data::FaceDataset tiny_dataset(std::size_t identities, const std::string& prefix = "id",
                                      data::Provenance provenance = data::Provenance::kReal, std::size_t size = 4) {
  data::FaceDataset ds;
  for (std::size_t i = 0; i < identities; ++i) {
    for (Emotion e : kAllEmotions) {
      data::LabeledFace f;
      f.image = ImageTensor(size, size, 1, static_cast<float>(index_of(e)) / 8.0f + 0.01f * static_cast<float>(i % 7));
      f.emotion = e;
      f.identity_id = prefix + std::to_string(i);
      f.provenance = provenance;
      f.source_db = provenance == data::Provenance::kReal ? "tiny" : "generated";
      ds.add(std::move(f));
    }
  }
  return ds;
}

}  // namespace fergan::testing
