#include "fergan/data/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

#include "fergan/common/fs.hpp"

namespace fergan::data {

ImageTensor read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("image not found: " + path.string());
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw DataError("cannot decode image: " + path.string());

  double scale = 1.0;
  switch (mat.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F: scale = 1.0; break;
    default: throw DataError("unsupported pixel depth in " + path.string());
  }
  cv::Mat f;
  mat.convertTo(f, CV_32F, scale);

  const int src_channels = f.channels();
  const std::size_t channels = src_channels >= 3 ? 3 : 1;
  ImageTensor image(static_cast<std::size_t>(f.rows), static_cast<std::size_t>(f.cols), channels);
  for (int y = 0; y < f.rows; ++y) {
    const float* row = f.ptr<float>(y);
    for (int x = 0; x < f.cols; ++x) {
      const float* px = row + x * src_channels;
      if (channels == 1) {
        image.at(y, x, 0) = px[0];
      } else {
        // BGR(A) -> RGB
        image.at(y, x, 0) = px[2];
        image.at(y, x, 1) = px[1];
        image.at(y, x, 2) = px[0];
      }
    }
  }
  return image;
}

void write_png(const std::filesystem::path& path, const ImageTensor& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw ShapeError("write_png: expected 1 or 3 channels, got " + std::to_string(image.channels()));
  }
  const int type = image.channels() == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat mat(static_cast<int>(image.height()), static_cast<int>(image.width()), type);
  for (std::size_t y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(static_cast<int>(y));
    for (std::size_t x = 0; x < image.width(); ++x) {
      for (std::size_t c = 0; c < image.channels(); ++c) {
        const std::size_t dst_c = image.channels() == 3 ? 2 - c : c;
        const float v = std::clamp(image.at(y, x, c), 0.0f, 1.0f);
        row[x * image.channels() + dst_c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
  std::vector<unsigned char> encoded;
  if (!cv::imencode(".png", mat, encoded, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    throw DataError("cannot encode PNG for " + path.string());
  }
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(encoded.data()), encoded.size()));
}

}  // namespace fergan::data
