#include "fergan/data/preprocess.hpp"

#include <algorithm>
#include <cmath>

namespace fergan::data {

ImageTensor to_grayscale(const ImageTensor& image) {
  if (image.channels() == 1) return image;
  if (image.channels() < 3) throw DataError("grayscale: expected 1 or 3+ channels");
  ImageTensor out(image.height(), image.width(), 1);
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) {
      const double luma = 0.299 * image.at(y, x, 0) + 0.587 * image.at(y, x, 1) + 0.114 * image.at(y, x, 2);
      out.at(y, x) = static_cast<float>(luma);
    }
  }
  return out;
}

ImageTensor crop(const ImageTensor& image, const FaceBox& box) {
  if (box.width == 0 || box.height == 0) throw DataError("face box has zero area");
  if (box.x + box.width > image.width() || box.y + box.height > image.height()) {
    throw DataError("face box exceeds image bounds");
  }
  ImageTensor out(box.height, box.width, image.channels());
  for (std::size_t y = 0; y < box.height; ++y) {
    for (std::size_t x = 0; x < box.width; ++x) {
      for (std::size_t c = 0; c < image.channels(); ++c) out.at(y, x, c) = image.at(box.y + y, box.x + x, c);
    }
  }
  return out;
}

FaceBox center_box(std::size_t height, std::size_t width, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DataError("crop fraction must lie in (0, 1]");
  const std::size_t side_limit = std::min(height, width);
  const auto side = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::floor(static_cast<double>(side_limit) * fraction + 0.5)), 1, side_limit);
  return {(width - side) / 2, (height - side) / 2, side, side};
}

ImageTensor resize_bilinear(const ImageTensor& image, std::size_t height, std::size_t width) {
  if (image.empty()) throw DataError("resize: empty image");
  if (height == image.height() && width == image.width()) return image;
  ImageTensor out(height, width, image.channels());
  const double sy = static_cast<double>(image.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(image.width()) / static_cast<double>(width);
  const auto max_y = static_cast<double>(image.height() - 1);
  const auto max_x = static_cast<double>(image.width() - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < image.channels(); ++c) {
        const double top = (1 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c);
        const double bottom = (1 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c);
        out.at(y, x, c) = static_cast<float>((1 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

ImageTensor preprocess(const ImageTensor& image, const std::optional<FaceBox>& face_box,
                       const PreprocessOptions& options) {
  if (image.empty()) throw DataError("preprocess: empty image");
  if (options.output_size == 0) throw DataError("preprocess: output size must be positive");
  const FaceBox box = face_box ? *face_box : center_box(image.height(), image.width(), options.crop_fraction);
  ImageTensor out = resize_bilinear(to_grayscale(crop(image, box)), options.output_size, options.output_size);
  for (auto& v : out.values()) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

}  // namespace fergan::data
