#include "fergan/data/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "fergan/common/csv.hpp"
#include "fergan/common/fs.hpp"
#include "fergan/common/hash.hpp"
#include "fergan/data/cache.hpp"
#include "fergan/data/image_io.hpp"

namespace fergan::data {
namespace {

namespace fs = std::filesystem;

struct Columns {
  std::size_t path, identity, emotion, provenance, source;
  std::optional<std::size_t> face_box;
  std::size_t count;
};

std::string where(const fs::path& manifest, std::size_t line) {
  return manifest.string() + ":" + std::to_string(line) + ": ";
}

Columns parse_header(const fs::path& manifest, const csv::ParsedRow& header) {
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.fields.size(); ++i) pos[header.fields[i]] = i;
  auto need = [&](const char* name) {
    const auto it = pos.find(name);
    if (it == pos.end()) throw DataError(where(manifest, header.line) + "header lacks column '" + name + "'");
    return it->second;
  };
  Columns c{need("path"), need("identity_id"), need("emotion"), need("provenance"), need("source_db"),
            std::nullopt, header.fields.size()};
  if (const auto it = pos.find("face_box"); it != pos.end()) c.face_box = it->second;
  return c;
}

std::optional<FaceBox> parse_face_box(const std::string& text, const fs::path& manifest, std::size_t line) {
  if (text.empty()) return std::nullopt;
  std::istringstream ss(text);
  long long v[4];
  for (auto& x : v) {
    if (!(ss >> x) || x < 0) throw DataError(where(manifest, line) + "malformed face_box '" + text + "'");
  }
  std::string rest;
  if (ss >> rest) throw DataError(where(manifest, line) + "malformed face_box '" + text + "'");
  return FaceBox{static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), static_cast<std::size_t>(v[2]),
                 static_cast<std::size_t>(v[3])};
}

fs::path manifest_dir(const fs::path& manifest_path) {
  return fs::weakly_canonical(fs::absolute(manifest_path)).parent_path();
}

std::string sanitize(std::string_view text) {
  std::string out;
  for (const char c : text) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
  }
  return out;
}

}  // namespace

fs::path resolve_image_path(const fs::path& manifest_path, const std::string& relative) {
  const fs::path p(relative);
  if (p.is_absolute()) return p.lexically_normal();
  const fs::path normal = p.lexically_normal();
  if (normal.empty() || *normal.begin() == "..") {
    throw DataError("image path '" + relative + "' escapes the manifest directory");
  }
  return manifest_dir(manifest_path) / normal;
}

std::vector<ManifestRecord> read_manifest(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) throw DataError("manifest not found: " + manifest_path.string());
  const auto rows = csv::read_file(manifest_path);
  std::vector<ManifestRecord> out;
  if (rows.empty()) return out;
  const Columns cols = parse_header(manifest_path, rows.front());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != cols.count) {
      throw DataError(where(manifest_path, row.line) + "expected " + std::to_string(cols.count) + " fields, found " +
                      std::to_string(row.fields.size()));
    }
    ManifestRecord rec{row.fields[cols.path],       row.fields[cols.identity], row.fields[cols.emotion],
                       row.fields[cols.provenance], row.fields[cols.source],
                       cols.face_box ? row.fields[*cols.face_box] : std::string()};
    if (rec.relative_path.empty()) throw DataError(where(manifest_path, row.line) + "empty path");
    if (rec.identity_id.empty()) throw DataError(where(manifest_path, row.line) + "empty identity_id");
    if (!parse_emotion(rec.emotion)) {
      throw DataError(where(manifest_path, row.line) + "unknown emotion '" + rec.emotion +
                      "' (expected one of anger, disgust, fear, happiness, sadness, surprised)");
    }
    if (!parse_provenance(rec.provenance)) {
      throw DataError(where(manifest_path, row.line) + "unknown provenance '" + rec.provenance +
                      "' (expected real or generated)");
    }
    try {
      resolve_image_path(manifest_path, rec.relative_path);
    } catch (const DataError& e) {
      throw DataError(where(manifest_path, row.line) + e.what());
    }
    parse_face_box(rec.face_box, manifest_path, row.line);
    out.push_back(std::move(rec));
  }
  return out;
}

ManifestSummary summarize_manifest(const fs::path& manifest_path) {
  ManifestSummary s;
  std::set<std::string> seen;
  for (const auto& rec : read_manifest(manifest_path)) {
    if (seen.insert(rec.identity_id).second) s.identities.push_back(rec.identity_id);
    s.image_paths.push_back(resolve_image_path(manifest_path, rec.relative_path));
  }
  return s;
}

FaceDataset load_corpus(const fs::path& manifest_path, const PreprocessOptions& options, PreprocessCache* cache) {
  const auto records = read_manifest(manifest_path);
  FaceDataset dataset;
  std::size_t line = 1;
  for (const auto& rec : records) {
    ++line;
    const fs::path image_path = resolve_image_path(manifest_path, rec.relative_path);
    const auto box = parse_face_box(rec.face_box, manifest_path, line);
    ImageTensor image;
    try {
      if (cache) {
        const std::string key = PreprocessCache::key(sha256_file(image_path), options, box);
        if (auto hit = cache->get(key)) {
          image = std::move(*hit);
        } else {
          image = preprocess(read_image(image_path), box, options);
          cache->put(key, image);
        }
      } else {
        image = preprocess(read_image(image_path), box, options);
      }
    } catch (const DataError& e) {
      throw DataError("manifest " + manifest_path.string() + ", identity '" + rec.identity_id + "': " + e.what());
    }
    dataset.add(LabeledFace{std::move(image), *parse_emotion(rec.emotion), rec.identity_id,
                            *parse_provenance(rec.provenance), rec.source_db, image_path, box});
  }
  return dataset;
}

std::string format_manifest(const FaceDataset& dataset, const fs::path& manifest_path) {
  const fs::path dir = manifest_dir(manifest_path);
  std::string out = std::string(kManifestHeader) + "\n";
  for (const auto& r : dataset.records()) {
    if (r.path.empty()) throw DataError("cannot write manifest row for in-memory face of '" + r.identity_id + "'");
    const fs::path abs = fs::weakly_canonical(fs::absolute(r.path));
    const fs::path rel = abs.lexically_relative(dir);
    const bool inside = !rel.empty() && *rel.begin() != "..";
    out += csv::format_row({inside ? rel.generic_string() : abs.generic_string(), r.identity_id,
                            std::string(to_string(r.emotion)), std::string(to_string(r.provenance)), r.source_db});
  }
  return out;
}

void write_manifest(const FaceDataset& dataset, const fs::path& manifest_path) {
  write_file_atomic(manifest_path, format_manifest(dataset, manifest_path));
}

FaceDataset save_dataset(const FaceDataset& dataset, const fs::path& dir, const std::string& manifest_name) {
  ensure_directory(dir / "images");
  FaceDataset saved;
  std::size_t index = 0;
  for (const auto& r : dataset.records()) {
    char prefix[16];
    std::snprintf(prefix, sizeof(prefix), "%06zu", index++);
    const fs::path file = dir / "images" /
                          (std::string(prefix) + "_" + sanitize(r.identity_id) + "_" +
                           std::string(to_string(r.emotion)) + ".png");
    write_png(file, r.image);
    LabeledFace copy = r;
    copy.path = fs::weakly_canonical(fs::absolute(file));
    copy.face_box.reset();
    saved.add(std::move(copy));
  }
  write_manifest(saved, dir / manifest_name);
  return saved;
}

}  // namespace fergan::data
