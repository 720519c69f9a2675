#include "fergan/eval/metrics.hpp"

#include "fergan/common/error.hpp"

namespace fergan::eval {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) {
    for (auto v : row) t += v;
  }
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < kNumEmotions; ++i) t += counts[i][i];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t row) const {
  std::uint64_t t = 0;
  for (auto v : counts.at(row)) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t col) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row.at(col);
  return t;
}

std::array<std::array<double, kNumEmotions>, kNumEmotions> ConfusionMatrix::row_normalized() const {
  std::array<std::array<double, kNumEmotions>, kNumEmotions> out{};
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    const std::uint64_t s = row_sum(i);
    if (s == 0) continue;
    for (std::size_t j = 0; j < kNumEmotions; ++j) {
      out[i][j] = static_cast<double>(counts[i][j]) / static_cast<double>(s);
    }
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                     std::to_string(predicted.size()) + " predictions");
  }
  if (truth.empty()) throw ShapeError("confusion: empty label sequence");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || t >= static_cast<int>(kNumEmotions) || p < 0 || p >= static_cast<int>(kNumEmotions)) {
      throw DataError("confusion: label outside 0..5 at position " + std::to_string(i));
    }
    ++m.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  return m;
}

double accuracy(const ConfusionMatrix& m) {
  const std::uint64_t total = m.total();
  return total == 0 ? 0.0 : static_cast<double>(m.trace()) / static_cast<double>(total);
}

std::array<ClassMetrics, kNumEmotions> per_class_metrics(const ConfusionMatrix& m) {
  std::array<ClassMetrics, kNumEmotions> out{};
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    const double tp = static_cast<double>(m.counts[c][c]);
    const std::uint64_t predicted = m.col_sum(c), actual = m.row_sum(c);
    ClassMetrics& r = out[c];
    r.precision_undefined = predicted == 0;
    r.recall_undefined = actual == 0;
    r.precision = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    r.recall = actual == 0 ? 0.0 : tp / static_cast<double>(actual);
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  }
  return out;
}

}  // namespace fergan::eval
