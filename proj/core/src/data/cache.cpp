#include "fergan/data/cache.hpp"

#include <cstdint>
#include <cstring>
#include <sstream>

#include "fergan/common/fs.hpp"
#include "fergan/common/hash.hpp"

namespace fergan::data {

PreprocessCache::PreprocessCache(std::filesystem::path dir) : dir_(std::move(dir)) { ensure_directory(dir_); }

std::string PreprocessCache::key(const std::string& content_hash, const PreprocessOptions& options,
                                 const std::optional<FaceBox>& box) {
  std::ostringstream ss;
  ss << content_hash << '|' << options.output_size << '|' << options.crop_fraction;
  if (box) ss << '|' << box->x << ',' << box->y << ',' << box->width << ',' << box->height;
  return sha256_hex(ss.str());
}

std::optional<ImageTensor> PreprocessCache::get(const std::string& key) const {
  const auto path = dir_ / (key + ".f32");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  const std::string bytes = read_file(path);
  std::uint32_t dims[3];
  if (bytes.size() < sizeof(dims)) return std::nullopt;
  std::memcpy(dims, bytes.data(), sizeof(dims));
  const std::size_t n = std::size_t{dims[0]} * dims[1] * dims[2];
  if (bytes.size() != sizeof(dims) + n * sizeof(float)) return std::nullopt;
  std::vector<float> data(n);
  std::memcpy(data.data(), bytes.data() + sizeof(dims), n * sizeof(float));
  ++hits_;
  return ImageTensor(dims[0], dims[1], dims[2], std::move(data));
}

void PreprocessCache::put(const std::string& key, const ImageTensor& image) const {
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(image.height()), static_cast<std::uint32_t>(image.width()),
                                 static_cast<std::uint32_t>(image.channels())};
  std::string bytes(reinterpret_cast<const char*>(dims), sizeof(dims));
  bytes.append(reinterpret_cast<const char*>(image.values().data()), image.size() * sizeof(float));
  write_file_atomic(dir_ / (key + ".f32"), bytes);
}

}  // namespace fergan::data
