#pragma once

#include <filesystem>

#include "fergan/image.hpp"

namespace fergan::data {

/// Decodes PNG/JPEG/PGM/PPM/BMP (anything the codec library reads) into
/// [0, 1] intensities. Colour images come back as RGB; alpha is dropped.
ImageTensor read_image(const std::filesystem::path& path);

/// Encodes as 8-bit PNG (grey or RGB), clamping to [0, 1]. Output bytes are a
/// pure function of the pixel values.
void write_png(const std::filesystem::path& path, const ImageTensor& image);

}  // namespace fergan::data
