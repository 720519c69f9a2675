#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fergan/data/dataset.hpp"
#include "fergan/emotion.hpp"
#include "fergan/nn/sequential.hpp"

namespace fergan::fer {

/// The expression CNN: conv, conv, pool, dropout, conv, pool, conv, pool,
/// dropout, flatten, dense+ReLU, dropout, dense+softmax. Only sizes vary; the
/// layer sequence is fixed.
struct ClassifierSpec {
  std::size_t input_size = 64;
  std::size_t input_channels = 1;
  std::array<std::size_t, 4> conv_widths{32, 64, 128, 128};
  std::size_t dense_units = 1024;
  std::size_t classes = kNumEmotions;
  /// Square kernel with same padding.
  std::size_t kernel = 3;
  std::array<double, 3> dropout{0.25, 0.25, 0.5};

  /// 8x8 input, widths 2/4/8/8, dense 16: small enough for finite differences.
  static ClassifierSpec shrunken();

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static ClassifierSpec from_json(const nlohmann::json& doc);
  std::string digest() const;
};

/// One row of the model summary table.
struct LayerRow {
  std::size_t row = 0;  // 1-based
  std::string layer;    // "Conv2D", "Max Pooling", "Drop out", "Flatten", "Dense"
  nn::Shape input;      // H x W x C, or {features}
  nn::Shape output;
  std::size_t units = 0;  // filters or dense units
  std::size_t pool = 0;
  double dropout = 0.0;
  std::string activation;  // "Relu", "Softmax", or empty
};

/// The 13 rows with shapes propagated from the spec. Shapes are HWC.
std::vector<LayerRow> layer_table(const ClassifierSpec& spec);

/// Layers of the network; the softmax is left to the loss and to predict().
template <typename T>
nn::Sequential<T> build_network(const ClassifierSpec& spec, std::uint64_t seed);

struct Classifier {
  ClassifierSpec spec;
  nn::Sequential<float> network;
  std::string spec_digest;
};

/// Freshly initialised weights; the same seed gives the same weights.
Classifier build_classifier(const ClassifierSpec& spec, std::uint64_t seed);

/// Class probabilities, one row per image. Images must be
/// input_size x input_size x input_channels. Dropout is inactive.
std::vector<std::array<double, kNumEmotions>> predict(const Classifier& model, std::span<const ImageTensor> images);
/// Same for a dataset's records.
std::vector<std::array<double, kNumEmotions>> predict(const Classifier& model, const data::FaceDataset& dataset);

void save_classifier(const std::filesystem::path& path, const Classifier& model,
                     const nlohmann::json& extra_metadata = nlohmann::json::object());
/// Throws DataError for a foreign file or a digest mismatch.
Classifier load_classifier(const std::filesystem::path& path);

enum class OptimizerKind { kAdam, kSgd };

struct FitConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 0;
  /// Stop after this many epochs without a validation-accuracy improvement.
  std::optional<std::size_t> patience = 15;

  void validate() const;
  nlohmann::json to_json() const;
  static FitConfig from_json(const nlohmann::json& doc);
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  /// Absent when no validation set was given.
  std::optional<double> val_loss;
  std::optional<double> val_acc;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  /// Index into `epochs` of the selected weights; absent for zero epochs.
  std::optional<std::size_t> best;

  /// CSV: epoch,train_loss,train_acc,val_loss,val_acc (empty cells when
  /// there is no validation set).
  std::string to_csv() const;
};

struct FitOptions {
  std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
  Classifier model;
  TrainingLog log;
};

/// Minibatch training with cross-entropy. Selects the epoch with the best
/// validation accuracy (earliest on ties), or the last epoch when `val` is
/// empty. Throws DataError for an empty or single-class training set and
/// TrainingError on a non-finite loss.
FitResult train_classifier(const data::FaceDataset& train, const data::FaceDataset& val, const FitConfig& config,
                           const ClassifierSpec& spec = {}, const FitOptions& options = {});

}  // namespace fergan::fer
