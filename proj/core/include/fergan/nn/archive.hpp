#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fergan/nn/sequential.hpp"

namespace fergan::nn {

struct ArchiveTensor {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

/// Single-file checkpoint: a JSON metadata document followed by raw
/// little-endian float32 blobs indexed by name.
///
/// Layout: "FERGANCK" | u32 version | u64 header bytes | header JSON | blobs.
/// The header is {"metadata": ..., "tensors": [{name, shape, offset, count}]}
/// with offsets counted in bytes from the start of the blob section.
struct Archive {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ArchiveTensor> tensors;

  const ArchiveTensor& find(const std::string& name) const;
  bool contains(const std::string& name) const;
};

void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

/// Adds the network's parameters as "<prefix>/<layer>.<param>" entries and
/// its architecture under metadata["networks"][prefix].
void store_network(Archive& archive, const std::string& prefix, const Sequential<float>& net);

/// Rebuilds a network from metadata["networks"][prefix] and loads its weights.
/// Throws ShapeError when a stored tensor disagrees with the architecture.
Sequential<float> load_network(const Archive& archive, const std::string& prefix);

}  // namespace fergan::nn
