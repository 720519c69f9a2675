#include "fergan/eval/report.hpp"

#include <algorithm>
#include <set>

#include "fergan/common/fs.hpp"
#include "fergan/eval/charts.hpp"

namespace fergan::eval {

namespace {

std::string file_stem(const std::string& tag) {
  std::string out = tag.empty() ? std::string("untagged") : tag;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                    c == '_' || c == '.' || c == '+';
    if (!ok) c = '_';
  }
  return out;
}

std::string path_key(const std::filesystem::path& p) {
  std::error_code ec;
  const auto canonical = std::filesystem::weakly_canonical(p, ec);
  return (ec ? p.lexically_normal() : canonical).generic_string();
}

}  // namespace

nlohmann::json EvaluationReport::to_json() const {
  nlohmann::json classes = nlohmann::json::array(), raw = nlohmann::json::array(),
                 normalized = nlohmann::json::array(), metrics = nlohmann::json::array(),
                 undefined = nlohmann::json::array();
  const auto norm = confusion.row_normalized();
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    const std::string name(to_string(kAllEmotions[i]));
    classes.push_back(name);
    raw.push_back(confusion.counts[i]);
    normalized.push_back(norm[i]);
    const ClassMetrics& m = per_class[i];
    metrics.push_back({{"class", name},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"precision_undefined", m.precision_undefined},
                       {"recall_undefined", m.recall_undefined}});
    if (m.precision_undefined || m.recall_undefined) undefined.push_back(name);
  }
  return {{"model_tag", model_tag},
          {"dataset_tag", dataset_tag},
          {"cross_database", cross_database},
          {"samples", confusion.total()},
          {"accuracy", accuracy},
          {"classes", classes},
          {"confusion", {{"raw", raw}, {"row_normalized", normalized}}},
          {"per_class", metrics},
          {"zero_denominator_classes", undefined}};
}

EvaluationReport EvaluationReport::from_json(const nlohmann::json& doc) {
  EvaluationReport r;
  try {
    r.model_tag = doc.at("model_tag").get<std::string>();
    r.dataset_tag = doc.at("dataset_tag").get<std::string>();
    r.cross_database = doc.at("cross_database").get<bool>();
    r.accuracy = doc.at("accuracy").get<double>();
    const auto& raw = doc.at("confusion").at("raw");
    for (std::size_t i = 0; i < kNumEmotions; ++i) {
      for (std::size_t j = 0; j < kNumEmotions; ++j) r.confusion.counts[i][j] = raw.at(i).at(j).get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
  r.per_class = per_class_metrics(r.confusion);
  return r;
}

EvaluationReport make_report(std::span<const int> truth, std::span<const int> predicted, std::string model_tag,
                             std::string dataset_tag) {
  EvaluationReport r;
  r.confusion = confusion(truth, predicted);
  r.accuracy = eval::accuracy(r.confusion);
  r.per_class = per_class_metrics(r.confusion);
  r.model_tag = std::move(model_tag);
  r.dataset_tag = std::move(dataset_tag);
  return r;
}

EvaluationReport evaluate(const fer::Classifier& model, const data::FaceDataset& dataset, std::string model_tag,
                          std::string dataset_tag) {
  if (dataset.empty()) throw DataError("evaluate: empty dataset '" + dataset_tag + "'");
  const auto probs = fer::predict(model, dataset);
  std::vector<int> truth, predicted;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    truth.push_back(index_of(dataset[i].emotion));
    predicted.push_back(static_cast<int>(std::max_element(probs[i].begin(), probs[i].end()) - probs[i].begin()));
  }
  return make_report(truth, predicted, std::move(model_tag), std::move(dataset_tag));
}

TrainingFootprint TrainingFootprint::of(const data::FaceDataset& dataset) {
  TrainingFootprint f;
  f.identities = dataset.identities();
  for (const auto& r : dataset.records()) {
    if (!r.path.empty()) f.image_paths.push_back(r.path);
  }
  return f;
}

TrainingFootprint TrainingFootprint::of(const data::ManifestSummary& summary) {
  return {summary.identities, summary.image_paths};
}

void check_disjoint(const data::FaceDataset& heldout, std::span<const TrainingFootprint> training) {
  std::set<std::string> train_ids, train_paths;
  for (const auto& f : training) {
    train_ids.insert(f.identities.begin(), f.identities.end());
    for (const auto& p : f.image_paths) train_paths.insert(path_key(p));
  }
  std::vector<std::string> shared_ids, shared_paths;
  for (const auto& id : heldout.identities()) {
    if (train_ids.contains(id)) shared_ids.push_back(id);
  }
  std::set<std::string> seen;
  for (const auto& r : heldout.records()) {
    if (r.path.empty()) continue;
    const std::string key = path_key(r.path);
    if (train_paths.contains(key) && seen.insert(key).second) shared_paths.push_back(key);
  }
  if (shared_ids.empty() && shared_paths.empty()) return;
  std::string msg = "cross-database evaluation refused: held-out set overlaps training data";
  if (!shared_ids.empty()) {
    msg += "; shared identities:";
    for (const auto& id : shared_ids) msg += " " + id;
  }
  if (!shared_paths.empty()) {
    msg += "; shared images:";
    for (const auto& p : shared_paths) msg += " " + p;
  }
  throw OverlapError(msg, std::move(shared_ids), std::move(shared_paths));
}

EvaluationReport cross_database_evaluate(const fer::Classifier& model, const data::FaceDataset& heldout,
                                         std::span<const TrainingFootprint> training, std::string model_tag,
                                         std::string dataset_tag) {
  if (heldout.empty()) throw DataError("cross_database_evaluate: empty held-out set");
  check_disjoint(heldout, training);
  EvaluationReport r = evaluate(model, heldout, std::move(model_tag), std::move(dataset_tag));
  r.cross_database = true;
  return r;
}

EvaluationReport cross_database_evaluate(const fer::Classifier& model, const data::FaceDataset& heldout,
                                         std::span<const std::filesystem::path> training_manifests,
                                         std::string model_tag, std::string dataset_tag) {
  std::vector<TrainingFootprint> footprints;
  for (const auto& m : training_manifests) footprints.push_back(TrainingFootprint::of(data::summarize_manifest(m)));
  return cross_database_evaluate(model, heldout, footprints, std::move(model_tag), std::move(dataset_tag));
}

std::vector<std::filesystem::path> write_report(const EvaluationReport& report, const std::filesystem::path& dir) {
  ensure_directory(dir);
  const std::string stem = file_stem(report.model_tag) + "__" + file_stem(report.dataset_tag);
  const std::string title = report.model_tag + " on " + report.dataset_tag;
  std::vector<std::filesystem::path> paths{dir / (stem + ".json"), dir / (stem + ".confusion.svg"),
                                           dir / (stem + ".metrics.svg")};
  write_file_atomic(paths[0], report.to_json().dump(2) + "\n");
  write_file_atomic(paths[1], confusion_heatmap_svg(report.confusion, title));
  write_file_atomic(paths[2], metrics_bar_svg(report.per_class, title));
  return paths;
}

}  // namespace fergan::eval
