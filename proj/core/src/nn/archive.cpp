#include "fergan/nn/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fergan/common/fs.hpp"

namespace fergan::nn {
namespace {

constexpr char kMagic[8] = {'F', 'E', 'R', 'G', 'A', 'N', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

template <typename U>
void append_pod(std::string& out, U value) {
  char bytes[sizeof(U)];
  std::memcpy(bytes, &value, sizeof(U));
  out.append(bytes, sizeof(U));
}

template <typename U>
U read_pod(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(U) > in.size()) throw DataError("archive: truncated file");
  U value;
  std::memcpy(&value, in.data() + pos, sizeof(U));
  pos += sizeof(U);
  return value;
}

}  // namespace

const ArchiveTensor& Archive::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t;
  }
  throw DataError("archive: missing tensor '" + name + "'");
}

bool Archive::contains(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  nlohmann::json header;
  header["metadata"] = archive.metadata;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : archive.tensors) {
    if (t.values.size() != numel(t.shape)) throw ShapeError("archive: tensor '" + t.name + "' size/shape mismatch");
    header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.values.size()}});
    offset += t.values.size() * sizeof(float);
  }
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  append_pod(out, kVersion);
  append_pod(out, static_cast<std::uint64_t>(header_text.size()));
  out += header_text;
  for (const auto& t : archive.tensors) {
    out.append(reinterpret_cast<const char*>(t.values.data()), t.values.size() * sizeof(float));
  }
  write_file_atomic(path, out);
}

Archive read_archive(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw DataError("archive: " + path.string() + " is not a fergan checkpoint");
  }
  std::size_t pos = sizeof(kMagic);
  const auto version = read_pod<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw DataError("archive: unsupported version " + std::to_string(version));
  const auto header_size = read_pod<std::uint64_t>(bytes, pos);
  if (pos + header_size > bytes.size()) throw DataError("archive: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_size));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("archive: corrupt header: ") + e.what());
  }
  pos += header_size;

  Archive archive;
  archive.metadata = header.at("metadata");
  for (const auto& entry : header.at("tensors")) {
    ArchiveTensor t;
    t.name = entry.at("name").get<std::string>();
    t.shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto count = entry.at("count").get<std::uint64_t>();
    if (count != numel(t.shape)) throw DataError("archive: tensor '" + t.name + "' count disagrees with shape");
    const std::size_t begin = pos + offset;
    if (begin + count * sizeof(float) > bytes.size()) throw DataError("archive: truncated blob '" + t.name + "'");
    t.values.resize(count);
    std::memcpy(t.values.data(), bytes.data() + begin, count * sizeof(float));
    archive.tensors.push_back(std::move(t));
  }
  return archive;
}

void store_network(Archive& archive, const std::string& prefix, const Sequential<float>& net) {
  archive.metadata["networks"][prefix] = net.describe();
  for (const auto& [name, tensor] : net.named_parameters()) {
    archive.tensors.push_back({prefix + "/" + name, tensor->shape(), tensor->storage()});
  }
}

Sequential<float> load_network(const Archive& archive, const std::string& prefix) {
  const auto& networks = archive.metadata.at("networks");
  if (!networks.contains(prefix)) throw DataError("archive: no network named '" + prefix + "'");
  Sequential<float> net = Sequential<float>::from_description(networks.at(prefix));
  const auto named = net.named_parameters();
  auto params = net.params();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const ArchiveTensor& stored = archive.find(prefix + "/" + named[i].first);
    if (stored.shape != params[i]->value.shape()) {
      throw ShapeError("archive: tensor '" + stored.name + "' has shape " + to_string(stored.shape) +
                       ", architecture expects " + to_string(params[i]->value.shape()));
    }
    params[i]->value = Tensor<float>(stored.shape, stored.values);
  }
  return net;
}

}  // namespace fergan::nn
