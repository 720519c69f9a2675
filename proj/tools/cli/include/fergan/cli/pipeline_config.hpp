#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fergan/data/preprocess.hpp"
#include "fergan/data/split.hpp"
#include "fergan/fer/classifier.hpp"
#include "fergan/gan/identity_source.hpp"
#include "fergan/gan/translator.hpp"

namespace fergan::cli {

struct HeldoutPath {
  std::string tag;
  std::filesystem::path manifest;
};

struct Paths {
  /// Real corpus: translator training data and the sweep's RFEs.
  std::filesystem::path corpus_manifest;
  /// Generated pool for the sweep; generated from `checkpoint` when empty.
  std::filesystem::path pool_manifest;
  std::filesystem::path checkpoint;
  std::filesystem::path output_dir = "fergan-out";
  /// Preprocessing cache; FERGAN_CACHE_DIR overrides it. Empty disables caching.
  std::filesystem::path cache_dir;
  std::vector<HeldoutPath> heldout;
  /// train-fer inputs.
  std::filesystem::path train_manifest;
  std::filesystem::path val_manifest;
};

struct GenerateSection {
  std::size_t identities = 100;
  std::size_t image_size = 64;
  std::string id_prefix = "gen";
  std::uint64_t seed = 0;
};

struct EvaluateSection {
  std::filesystem::path model;
  std::filesystem::path manifest;
  std::string tag = "heldout";
  std::string model_tag = "model";
  /// When nonempty the evaluation is cross-database and refuses overlap.
  std::vector<std::filesystem::path> training_manifests;
};

struct SweepSection {
  std::vector<std::size_t> k_values{1, 2, 3, 4, 5, 6, 10, 15, 20};
  bool include_synthetic = true;
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t pool_seed = 0;
  double forgetting_margin = 0.02;
  std::size_t workers = 1;
};

/// The single config document. Every section is optional; missing keys keep
/// their defaults and unknown keys are rejected. The top-level "seed" fills
/// every sub-seed the document leaves unset.
struct PipelineConfig {
  std::uint64_t seed = 0;
  Paths paths;
  data::PreprocessOptions preprocess;
  /// Applied to generated manifests, whose faces are already cropped.
  double generated_crop_fraction = 1.0;
  gan::GanTrainConfig gan;
  gan::IdentitySourceConfig identity_source;
  GenerateSection generate;
  fer::FitConfig fit;
  fer::ClassifierSpec classifier;
  data::SplitSpec split;
  SweepSection sweep;
  EvaluateSection evaluate;

  /// Relative paths are resolved against `base_dir`. Throws ConfigError.
  static PipelineConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  /// Fully resolved document; from_json(to_json()) reproduces the config.
  nlohmann::json to_json() const;
  /// Sub-config and numeric checks that hold for every command.
  void validate() const;
};

/// One `--set key.path=value` assignment, or a named flag.
struct Override {
  std::string key;
  nlohmann::json value;
};

/// Parses `key.path=value`. The value is read as JSON and kept as a string
/// when that fails. Throws ConfigError for a missing '=' or an empty key.
Override parse_override(const std::string& assignment);

/// Sets `dotted` to `value`, creating intermediate objects.
void set_path(nlohmann::json& doc, const std::string& dotted, nlohmann::json value);

/// Reads the document from `config_path` (or starts empty), applies the
/// overrides in order, then `seed` as the top-level seed and every sub-seed.
/// Relative paths in the file resolve against its directory; relative paths
/// in overrides resolve against the working directory.
PipelineConfig load_config(const std::optional<std::filesystem::path>& config_path,
                           const std::vector<Override>& overrides, std::optional<std::uint64_t> seed = {});

/// Throws ConfigError naming `what` and the path unless it exists.
void require_path(const std::filesystem::path& path, const std::string& what);

}  // namespace fergan::cli
