#include "fergan/eval/charts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string_view>

namespace fergan::eval {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(width) + " " + num(height) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, std::string_view content, std::string_view anchor = "middle",
                 std::string_view extra = "") {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + std::string(anchor) + "\"" +
         (extra.empty() ? "" : " " + std::string(extra)) + ">" + escape_xml(content) + "</text>\n";
}

std::string rect(double x, double y, double w, double h, std::string_view fill, std::string_view extra = "") {
  return "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" fill=\"" + std::string(fill) + "\"" + (extra.empty() ? "" : " " + std::string(extra)) + "/>\n";
}

std::string line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0) {
  return "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
         "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"/>\n";
}

/// White to dark blue.
std::string shade(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto mix = [&](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(255, 8), mix(255, 48), mix(255, 107));
  return buf;
}

constexpr std::array<const char*, 5> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};

}  // namespace

std::string confusion_heatmap_svg(const ConfusionMatrix& m, const std::string& title) {
  constexpr double cell = 56, left = 110, top = 60;
  const double size = cell * kNumEmotions;
  std::string svg = header(left + size + 30, top + size + 80);
  svg += text(left + size / 2, 28, title, "middle", "font-size=\"15\"");
  const auto norm = m.row_normalized();
  for (std::size_t i = 0; i < kNumEmotions; ++i) {
    const std::string name(to_string(kAllEmotions[i]));
    svg += text(left - 8, top + cell * (static_cast<double>(i) + 0.5) + 4, name, "end");
    svg += text(left + cell * (static_cast<double>(i) + 0.5), top + size + 18, name, "middle");
    for (std::size_t j = 0; j < kNumEmotions; ++j) {
      const double x = left + cell * static_cast<double>(j), y = top + cell * static_cast<double>(i);
      svg += rect(x, y, cell, cell, shade(norm[i][j]), "stroke=\"#cccccc\"");
      svg += text(x + cell / 2, y + cell / 2 + 4, std::to_string(m.counts[i][j]), "middle",
                  norm[i][j] > 0.55 ? "fill=\"white\"" : "fill=\"black\"");
    }
  }
  svg += text(left + size / 2, top + size + 44, "Predicted label");
  svg += text(18, top + size / 2, "True label", "middle",
              "transform=\"rotate(-90 18 " + num(top + size / 2) + ")\"");
  return svg + "</svg>\n";
}

std::string metrics_bar_svg(const std::array<ClassMetrics, kNumEmotions>& metrics, const std::string& title) {
  constexpr double left = 50, top = 50, plot_w = 540, plot_h = 260, group = plot_w / kNumEmotions;
  std::string svg = header(left + plot_w + 130, top + plot_h + 60);
  svg += text(left + plot_w / 2, 26, title, "middle", "font-size=\"15\"");
  for (int t = 0; t <= 5; ++t) {
    const double v = t / 5.0, y = top + plot_h * (1 - v);
    svg += line(left, y, left + plot_w, y, "#e0e0e0");
    svg += text(left - 6, y + 4, num(v), "end");
  }
  const std::array<const char*, 3> names{"precision", "recall", "f1"};
  const double bar = group / 4;
  for (std::size_t c = 0; c < kNumEmotions; ++c) {
    const std::array<double, 3> values{metrics[c].precision, metrics[c].recall, metrics[c].f1};
    for (std::size_t k = 0; k < 3; ++k) {
      const double h = plot_h * std::clamp(values[k], 0.0, 1.0);
      const double x = left + group * static_cast<double>(c) + bar * (static_cast<double>(k) + 0.5);
      svg += rect(x, top + plot_h - h, bar, h, kPalette[k]);
    }
    svg += text(left + group * (static_cast<double>(c) + 0.5), top + plot_h + 18, std::string(to_string(kAllEmotions[c])));
  }
  svg += line(left, top + plot_h, left + plot_w, top + plot_h, "black");
  for (std::size_t k = 0; k < 3; ++k) {
    const double y = top + 10 + 20 * static_cast<double>(k);
    svg += rect(left + plot_w + 16, y, 12, 12, kPalette[k]);
    svg += text(left + plot_w + 34, y + 10, names[k], "start");
  }
  return svg + "</svg>\n";
}

std::string line_plot_svg(const std::vector<std::string>& x_labels, const std::vector<LineSeries>& series,
                          const std::string& title, const std::string& y_label) {
  constexpr double left = 60, top = 50, plot_h = 280;
  const double step = 110, plot_w = step * static_cast<double>(std::max<std::size_t>(x_labels.size(), 1));
  std::string svg = header(left + plot_w + 160, top + plot_h + 80);
  svg += text(left + plot_w / 2, 26, title, "middle", "font-size=\"15\"");
  for (int t = 0; t <= 10; ++t) {
    const double v = t / 10.0, y = top + plot_h * (1 - v);
    svg += line(left, y, left + plot_w, y, "#eeeeee");
    svg += text(left - 6, y + 4, num(v), "end");
  }
  svg += line(left, top + plot_h, left + plot_w, top + plot_h, "black");
  svg += line(left, top, left, top + plot_h, "black");
  auto x_of = [&](std::size_t i) { return left + step * (static_cast<double>(i) + 0.5); };
  for (std::size_t i = 0; i < x_labels.size(); ++i) {
    svg += text(x_of(i), top + plot_h + 18, x_labels[i], "middle", "font-size=\"10\"");
  }
  svg += text(16, top + plot_h / 2, y_label, "middle", "transform=\"rotate(-90 16 " + num(top + plot_h / 2) + ")\"");
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % kPalette.size()];
    std::string path;
    bool pen_down = false;
    for (std::size_t i = 0; i < series[s].values.size() && i < x_labels.size(); ++i) {
      const double v = series[s].values[i];
      if (!std::isfinite(v)) {
        pen_down = false;
        continue;
      }
      const double y = top + plot_h * (1 - std::clamp(v, 0.0, 1.0));
      path += (pen_down ? " L " : " M ") + num(x_of(i)) + " " + num(y);
      pen_down = true;
      svg += "<circle cx=\"" + num(x_of(i)) + "\" cy=\"" + num(y) + "\" r=\"3\" fill=\"" + colour + "\"/>\n";
    }
    if (!path.empty()) {
      svg += "<path d=\"" + path.substr(1) + "\" fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"2\"/>\n";
    }
    const double ly = top + 10 + 20 * static_cast<double>(s);
    svg += rect(left + plot_w + 16, ly, 12, 12, colour);
    svg += text(left + plot_w + 34, ly + 10, series[s].name, "start");
  }
  return svg + "</svg>\n";
}

}  // namespace fergan::eval
