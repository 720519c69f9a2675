#pragma once

#include <cstddef>
#include <optional>

#include "fergan/image.hpp"

namespace fergan::data {

struct FaceBox {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;

  bool operator==(const FaceBox&) const = default;
};

struct PreprocessOptions {
  std::size_t output_size = 64;
  /// Side of the square centre crop relative to min(H, W); used when no face
  /// box is given.
  double crop_fraction = 0.8;
};

/// ITU-R BT.601 luma weights (0.299, 0.587, 0.114). Single-channel input is
/// returned unchanged.
ImageTensor to_grayscale(const ImageTensor& image);

ImageTensor crop(const ImageTensor& image, const FaceBox& box);

/// Square box of side round(min(H, W) * fraction), centred.
FaceBox center_box(std::size_t height, std::size_t width, double fraction);

/// Bilinear interpolation with half-pixel centres; same-size resize is exact.
ImageTensor resize_bilinear(const ImageTensor& image, std::size_t height, std::size_t width);

/// Face crop, then grey conversion, then resize to output_size^2 x 1 with
/// values clamped to [0, 1]. Throws DataError for a zero-area or
/// out-of-bounds box, or an empty image.
ImageTensor preprocess(const ImageTensor& image, const std::optional<FaceBox>& face_box,
                       const PreprocessOptions& options = {});

}  // namespace fergan::data
