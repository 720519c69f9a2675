#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fergan/data/dataset.hpp"
#include "fergan/data/preprocess.hpp"

namespace fergan::data {

class PreprocessCache;

/// One row of a manifest CSV:
///   path,identity_id,emotion,provenance,source_db[,face_box]
/// face_box, when present and non-empty, is "x y width height" in pixels.
struct ManifestRecord {
  std::string relative_path;
  std::string identity_id;
  std::string emotion;
  std::string provenance;
  std::string source_db;
  std::string face_box;
};

inline constexpr const char* kManifestHeader = "path,identity_id,emotion,provenance,source_db";

/// Parses and validates rows (emotion, provenance, identity, path). Errors name
/// the manifest and the 1-based line number.
std::vector<ManifestRecord> read_manifest(const std::filesystem::path& manifest_path);

/// Resolved absolute image path of a row. Relative paths must stay under the
/// manifest's directory.
std::filesystem::path resolve_image_path(const std::filesystem::path& manifest_path, const std::string& relative);

/// Decodes and preprocesses every row into a dataset.
FaceDataset load_corpus(const std::filesystem::path& manifest_path, const PreprocessOptions& options = {},
                        PreprocessCache* cache = nullptr);

/// Image paths and identity ids listed by a manifest, without decoding images.
struct ManifestSummary {
  std::vector<std::string> identities;
  std::vector<std::filesystem::path> image_paths;
};
ManifestSummary summarize_manifest(const std::filesystem::path& manifest_path);

/// Serialises records in dataset order. Paths under the manifest directory are
/// written relative to it; others are written absolute. Every record must
/// have a path.
std::string format_manifest(const FaceDataset& dataset, const std::filesystem::path& manifest_path);
void write_manifest(const FaceDataset& dataset, const std::filesystem::path& manifest_path);

/// Writes each record's image under dir/images/ as PNG and a manifest at
/// dir/<manifest_name>. Returns the dataset with paths pointing at the files.
FaceDataset save_dataset(const FaceDataset& dataset, const std::filesystem::path& dir,
                         const std::string& manifest_name = "manifest.csv");

}  // namespace fergan::data
