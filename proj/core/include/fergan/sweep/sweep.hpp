#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fergan/common/error.hpp"
#include "fergan/data/dataset.hpp"
#include "fergan/data/split.hpp"
#include "fergan/eval/report.hpp"
#include "fergan/fer/classifier.hpp"

namespace fergan::sweep {

struct HeldoutSet {
  std::string tag;
  data::FaceDataset dataset;
};

/// Everything one sweep needs. Datasets are loaded by the caller; every
/// record must carry an image path so that per-point manifests can be written.
struct ExperimentPlan {
  /// Augmentation units, strictly increasing. k = 0 (real only) always runs.
  std::vector<std::size_t> k_values{1, 2, 3, 4, 5, 6, 10, 15, 20};
  bool include_synthetic = true;
  data::FaceDataset real;
  data::FaceDataset pool;
  data::SplitSpec split;
  fer::FitConfig fit;
  fer::ClassifierSpec classifier;
  std::vector<HeldoutSet> heldout;
  /// Classifier seeds; every point is trained once per seed with the same init.
  std::vector<std::uint64_t> seeds{0};
  /// Order in which generated identities are consumed.
  std::uint64_t pool_seed = 0;
  double forgetting_margin = 0.02;
  std::filesystem::path output_dir;

  /// Throws ConfigError for an invalid k list, seed list, margin or split,
  /// and DataError when the pool cannot cover max(k) units.
  void validate() const;
  /// Generated identities the plan consumes.
  std::size_t pool_identities_needed() const;
};

/// A sweep point: k units of generated identities on top of the real set, or
/// the synthetic-only baseline (k absent).
struct SweepRow {
  std::optional<std::size_t> k;
  std::string composition;
  double train_acc = 0.0;
  double test_acc = 0.0;
  /// One entry per held-out tag, in plan order.
  std::vector<std::pair<std::string, double>> heldout_acc;
  std::string model_tag;
  std::uint64_t seed = 0;
  std::size_t train_identities = 0;
  std::size_t train_images = 0;
  /// Epoch (1-based) whose weights were kept, and how many ran.
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double final_train_acc = 0.0;
  std::vector<eval::EvaluationReport> reports;

  std::optional<double> heldout(const std::string& tag) const;
  nlohmann::json to_json() const;
  static SweepRow from_json(const nlohmann::json& doc);
};

/// "RFEs", "GFEs", or "RFEs + k × GFEs".
std::string composition_label(std::optional<std::size_t> k);

struct RunOptions {
  /// Checked between epochs and between points; raises Cancelled.
  const std::atomic<bool>* cancel = nullptr;
  /// Points trained concurrently by run_sweep.
  std::size_t workers = 1;
  std::function<void(const std::string&)> on_message;
  std::function<void(const SweepRow&)> on_row;
};

/// Datasets of one point after splitting and mixing.
struct PointData {
  data::FaceDataset train, val, test;
};

/// Splits the real corpus and builds the training, validation and test sets
/// of a point. Generated identities come from three disjoint sub-pools of the
/// seed-shuffled pool (one per split); point k uses the first k units of each,
/// so larger k extends smaller k.
PointData point_data(const ExperimentPlan& plan, std::optional<std::size_t> k, bool synthetic);

SweepRow run_experiment_real(const ExperimentPlan& plan, std::uint64_t seed, const RunOptions& options = {});
SweepRow run_experiment_synthetic(const ExperimentPlan& plan, std::uint64_t seed, const RunOptions& options = {});
SweepRow run_point(const ExperimentPlan& plan, std::size_t k, std::uint64_t seed, const RunOptions& options = {});

struct SweepResult {
  std::vector<SweepRow> rows;
  bool complete = false;
  /// Set when the sweep stopped early.
  std::string failure;
};

/// Runs k = 0, the synthetic baseline, then every k > 0, for each seed.
/// After each row, sweep.csv, rows.json and the plot are rewritten
/// atomically, so a crash loses at most the point in progress. Rows already
/// present in rows.json under the same plan digest are reused.
SweepResult run_sweep(const ExperimentPlan& plan, const RunOptions& options = {});

struct BestK {
  std::size_t k = 0;
  double accuracy = 0.0;
};

/// Highest held-out accuracy (averaged over seeds) among rows with a k;
/// ties go to the smaller k. Throws DataError when no row has a k or a row
/// lacks the tag.
BestK select_best_k(const std::vector<SweepRow>& rows, const std::string& heldout_tag);

/// Smallest k past the best k whose held-out accuracy is more than `margin`
/// below the peak.
std::optional<std::size_t> detect_forgetting_threshold(const std::vector<SweepRow>& rows,
                                                       const std::string& heldout_tag, double margin = 0.02);

/// sweep CSV: k,composition,train_acc,test_acc,<tag>_acc...,model_tag,seed.
std::string format_sweep_csv(const std::vector<SweepRow>& rows, const std::vector<std::string>& heldout_tags);

/// Writes sweep.csv, sweep.svg (accuracy per composition) and every row's
/// report JSON, heatmap and bar chart under dir/reports. Returns the paths.
std::vector<std::filesystem::path> emit_outputs(const std::vector<SweepRow>& rows,
                                                const std::vector<std::string>& heldout_tags,
                                                const std::filesystem::path& dir);

/// Digest of everything that determines the rows.
std::string plan_digest(const ExperimentPlan& plan);

}  // namespace fergan::sweep
