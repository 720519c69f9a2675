#pragma once

#include <array>
#include <string>
#include <vector>

#include "fergan/eval/metrics.hpp"

namespace fergan::eval {

/// Raw counts annotated in each cell, shaded by the row-normalised value.
std::string confusion_heatmap_svg(const ConfusionMatrix& m, const std::string& title);

/// Grouped precision / recall / F1 bars per class.
std::string metrics_bar_svg(const std::array<ClassMetrics, kNumEmotions>& metrics, const std::string& title);

struct LineSeries {
  std::string name;
  /// One value per x label; NaN leaves a gap.
  std::vector<double> values;
};

/// Categorical x axis, y fixed to [0, 1].
std::string line_plot_svg(const std::vector<std::string>& x_labels, const std::vector<LineSeries>& series,
                          const std::string& title, const std::string& y_label);

}  // namespace fergan::eval
