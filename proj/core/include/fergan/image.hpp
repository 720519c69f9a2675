#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fergan/common/error.hpp"

namespace fergan {

/// H x W x C intensities, interleaved (HWC), nominally in [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, float fill = 0.0f)
      : height_(height), width_(width), channels_(channels), data_(height * width * channels, fill) {}
  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> data)
      : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (data_.size() != height * width * channels) throw ShapeError("image data does not match its dimensions");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(std::size_t y, std::size_t x, std::size_t c = 0) { return data_[(y * width_ + x) * channels_ + c]; }
  float at(std::size_t y, std::size_t x, std::size_t c = 0) const { return data_[(y * width_ + x) * channels_ + c]; }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  bool same_shape(const ImageTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  bool all_finite() const;
  bool within(float lo, float hi) const;

  bool operator==(const ImageTensor&) const = default;

 private:
  std::size_t height_ = 0, width_ = 0, channels_ = 0;
  std::vector<float> data_;
};

}  // namespace fergan
