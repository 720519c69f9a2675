#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fergan/data/dataset.hpp"
#include "fergan/data/manifest.hpp"
#include "fergan/eval/metrics.hpp"
#include "fergan/fer/classifier.hpp"

namespace fergan::eval {

struct EvaluationReport {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::array<ClassMetrics, kNumEmotions> per_class{};
  std::string dataset_tag;
  std::string model_tag;
  bool cross_database = false;

  nlohmann::json to_json() const;
  static EvaluationReport from_json(const nlohmann::json& doc);
};

/// Report from already computed label sequences.
EvaluationReport make_report(std::span<const int> truth, std::span<const int> predicted, std::string model_tag,
                             std::string dataset_tag);

/// Argmax predictions of the model over every record. Throws DataError for an
/// empty dataset.
EvaluationReport evaluate(const fer::Classifier& model, const data::FaceDataset& dataset, std::string model_tag,
                          std::string dataset_tag);

/// Identities and image paths a model was trained on.
struct TrainingFootprint {
  std::vector<std::string> identities;
  std::vector<std::filesystem::path> image_paths;

  static TrainingFootprint of(const data::FaceDataset& dataset);
  static TrainingFootprint of(const data::ManifestSummary& summary);
};

/// Throws OverlapError listing every shared identity and image path.
void check_disjoint(const data::FaceDataset& heldout, std::span<const TrainingFootprint> training);

/// Refuses (OverlapError) when the held-out set shares an identity or an
/// image file with any training manifest; otherwise evaluates and tags the
/// report as cross-database.
EvaluationReport cross_database_evaluate(const fer::Classifier& model, const data::FaceDataset& heldout,
                                         std::span<const std::filesystem::path> training_manifests,
                                         std::string model_tag, std::string dataset_tag);
EvaluationReport cross_database_evaluate(const fer::Classifier& model, const data::FaceDataset& heldout,
                                         std::span<const TrainingFootprint> training, std::string model_tag,
                                         std::string dataset_tag);

/// Writes {model}__{dataset}.json, .confusion.svg and .metrics.svg into `dir`.
/// Returns the three paths.
std::vector<std::filesystem::path> write_report(const EvaluationReport& report, const std::filesystem::path& dir);

}  // namespace fergan::eval
