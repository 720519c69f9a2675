#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "fergan/emotion.hpp"

namespace fergan::eval {

/// Rows are true classes, columns predicted classes, both in Emotion order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumEmotions>, kNumEmotions> counts{};

  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t row) const;
  std::uint64_t col_sum(std::size_t col) const;
  /// Each row divided by its sum; all-zero rows stay zero.
  std::array<std::array<double, kNumEmotions>, kNumEmotions> row_normalized() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws ShapeError for unequal lengths or empty input and DataError for a
/// label outside 0..5.
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted);

/// trace / total; 0 for an empty matrix.
double accuracy(const ConfusionMatrix& m);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when the class was never predicted (precision) or never present
  /// (recall); the metric is then reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

std::array<ClassMetrics, kNumEmotions> per_class_metrics(const ConfusionMatrix& m);

}  // namespace fergan::eval
