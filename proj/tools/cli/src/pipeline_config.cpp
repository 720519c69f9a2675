#include "fergan/cli/pipeline_config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "fergan/common/fs.hpp"
#include "fergan/common/json_fields.hpp"

namespace fergan::cli {

namespace {

namespace fs = std::filesystem;

/// Keys holding a path, or (with "[]") an array of paths or of objects with a
/// "manifest" path.
const std::vector<std::string> kPathKeys{
    "paths.corpus_manifest", "paths.pool_manifest",          "paths.checkpoint",        "paths.output_dir",
    "paths.cache_dir",       "paths.train_manifest",         "paths.val_manifest",      "paths.heldout[]",
    "evaluate.model",        "evaluate.manifest",            "evaluate.training_manifests[]",
    "identity_source.corpus_manifest", "identity_source.model_path"};

std::string absolute_string(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

void absolutize_value(nlohmann::json& value, const fs::path& base) {
  if (value.is_string()) {
    value = absolute_string(value.get<std::string>(), base);
  } else if (value.is_object() && value.contains("manifest") && value.at("manifest").is_string()) {
    value["manifest"] = absolute_string(value.at("manifest").get<std::string>(), base);
  }
}

/// Rewrites every relative path in the document against `base`.
void absolutize(nlohmann::json& doc, const fs::path& base) {
  for (std::string key : kPathKeys) {
    const bool array = key.ends_with("[]");
    if (array) key.resize(key.size() - 2);
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot), field = key.substr(dot + 1);
    if (!doc.is_object() || !doc.contains(section) || !doc.at(section).is_object()) continue;
    auto& sec = doc.at(section);
    if (!sec.contains(field)) continue;
    auto& value = sec.at(field);
    if (array && value.is_array()) {
      for (auto& item : value) absolutize_value(item, base);
    } else {
      absolutize_value(value, base);
    }
  }
}

/// Objects merge key by key; anything else replaces.
void merge(nlohmann::json& into, const nlohmann::json& from) {
  if (!into.is_object() || !from.is_object()) {
    into = from;
    return;
  }
  for (const auto& [key, value] : from.items()) {
    if (into.contains(key)) {
      merge(into[key], value);
    } else {
      into[key] = value;
    }
  }
}

void fill_seed(nlohmann::json& doc, const char* section, const char* key, const nlohmann::json& value, bool force) {
  auto& sec = doc[section];
  if (sec.is_null()) sec = nlohmann::json::object();
  if (!sec.is_object()) return;
  if (force || !sec.contains(key)) sec[key] = value;
}

void apply_seed(nlohmann::json& doc, bool force) {
  if (!doc.contains("seed")) return;
  const nlohmann::json seed = doc.at("seed");
  fill_seed(doc, "gan", "seed", seed, force);
  fill_seed(doc, "fit", "seed", seed, force);
  fill_seed(doc, "split", "seed", seed, force);
  fill_seed(doc, "generate", "seed", seed, force);
  fill_seed(doc, "sweep", "pool_seed", seed, force);
  fill_seed(doc, "sweep", "seeds", nlohmann::json::array({seed}), force);
}

std::string path_string(const fs::path& p) { return p.string(); }

nlohmann::json identity_source_json(const gan::IdentitySourceConfig& c) {
  return {{"kind", c.kind},
          {"latent_dim", c.latent_dim},
          {"image_size", c.image_size},
          {"style", std::string(gan::to_string(c.style))},
          {"corpus_manifest", path_string(c.corpus_manifest)},
          {"model_path", path_string(c.model_path)}};
}

fs::path resolve(const std::string& p, const fs::path& base) { return fs::path(absolute_string(p, base)); }

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc, const fs::path& base) {
  PipelineConfig c;
  FieldReader top(doc, "config");
  top.read("seed", c.seed);

  if (const auto* p = top.child("paths")) {
    FieldReader r(*p, "config paths");
    std::string corpus, pool, checkpoint, output = c.paths.output_dir.string(), cache, train, val;
    r.read("corpus_manifest", corpus)
        .read("pool_manifest", pool)
        .read("checkpoint", checkpoint)
        .read("output_dir", output)
        .read("cache_dir", cache)
        .read("train_manifest", train)
        .read("val_manifest", val);
    if (const auto* h = r.child("heldout")) {
      if (!h->is_array()) throw ConfigError("config paths: 'heldout' must be an array");
      for (const auto& item : *h) {
        HeldoutPath hp;
        std::string manifest;
        FieldReader(item, "config paths heldout").read("tag", hp.tag).read("manifest", manifest).finish();
        hp.manifest = resolve(manifest, base);
        c.paths.heldout.push_back(std::move(hp));
      }
    }
    r.finish();
    c.paths.corpus_manifest = resolve(corpus, base);
    c.paths.pool_manifest = resolve(pool, base);
    c.paths.checkpoint = resolve(checkpoint, base);
    c.paths.output_dir = resolve(output, base);
    c.paths.cache_dir = resolve(cache, base);
    c.paths.train_manifest = resolve(train, base);
    c.paths.val_manifest = resolve(val, base);
  } else {
    c.paths.output_dir = resolve(c.paths.output_dir.string(), base);
  }

  if (const auto* p = top.child("preprocess")) {
    FieldReader(*p, "config preprocess")
        .read("output_size", c.preprocess.output_size)
        .read("crop_fraction", c.preprocess.crop_fraction)
        .read("generated_crop_fraction", c.generated_crop_fraction)
        .finish();
  }
  if (const auto* g = top.child("gan")) c.gan = gan::GanTrainConfig::from_json(*g);
  c.identity_source.latent_dim = c.gan.latent_dim;
  c.identity_source.image_size = c.gan.image_size;
  if (const auto* s = top.child("identity_source")) {
    FieldReader r(*s, "config identity_source");
    std::string style(gan::to_string(c.identity_source.style)), corpus, model;
    r.read("kind", c.identity_source.kind)
        .read("latent_dim", c.identity_source.latent_dim)
        .read("image_size", c.identity_source.image_size)
        .read("style", style)
        .read("corpus_manifest", corpus)
        .read("model_path", model)
        .finish();
    c.identity_source.style = gan::parse_face_style(style);
    c.identity_source.corpus_manifest = resolve(corpus, base);
    c.identity_source.model_path = resolve(model, base);
  }
  if (const auto* g = top.child("generate")) {
    FieldReader(*g, "config generate")
        .read("identities", c.generate.identities)
        .read("image_size", c.generate.image_size)
        .read("id_prefix", c.generate.id_prefix)
        .read("seed", c.generate.seed)
        .finish();
  }
  if (const auto* f = top.child("fit")) c.fit = fer::FitConfig::from_json(*f);
  if (const auto* s = top.child("classifier")) c.classifier = fer::ClassifierSpec::from_json(*s);
  if (const auto* s = top.child("split")) c.split = data::SplitSpec::from_json(*s);
  if (const auto* s = top.child("sweep")) {
    FieldReader(*s, "config sweep")
        .read("k_values", c.sweep.k_values)
        .read("include_synthetic", c.sweep.include_synthetic)
        .read("seeds", c.sweep.seeds)
        .read("pool_seed", c.sweep.pool_seed)
        .read("forgetting_margin", c.sweep.forgetting_margin)
        .read("workers", c.sweep.workers)
        .finish();
  }
  if (const auto* e = top.child("evaluate")) {
    FieldReader r(*e, "config evaluate");
    std::string model, manifest;
    std::vector<std::string> training;
    r.read("model", model)
        .read("manifest", manifest)
        .read("tag", c.evaluate.tag)
        .read("model_tag", c.evaluate.model_tag)
        .read("training_manifests", training)
        .finish();
    c.evaluate.model = resolve(model, base);
    c.evaluate.manifest = resolve(manifest, base);
    for (const auto& t : training) c.evaluate.training_manifests.push_back(resolve(t, base));
  }
  top.finish();
  return c;
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json heldout = nlohmann::json::array();
  for (const auto& h : paths.heldout) heldout.push_back({{"tag", h.tag}, {"manifest", path_string(h.manifest)}});
  nlohmann::json training = nlohmann::json::array();
  for (const auto& t : evaluate.training_manifests) training.push_back(path_string(t));
  return {
      {"seed", seed},
      {"paths",
       {{"corpus_manifest", path_string(paths.corpus_manifest)},
        {"pool_manifest", path_string(paths.pool_manifest)},
        {"checkpoint", path_string(paths.checkpoint)},
        {"output_dir", path_string(paths.output_dir)},
        {"cache_dir", path_string(paths.cache_dir)},
        {"heldout", heldout},
        {"train_manifest", path_string(paths.train_manifest)},
        {"val_manifest", path_string(paths.val_manifest)}}},
      {"preprocess",
       {{"output_size", preprocess.output_size},
        {"crop_fraction", preprocess.crop_fraction},
        {"generated_crop_fraction", generated_crop_fraction}}},
      {"gan", gan.to_json()},
      {"identity_source", identity_source_json(identity_source)},
      {"generate",
       {{"identities", generate.identities},
        {"image_size", generate.image_size},
        {"id_prefix", generate.id_prefix},
        {"seed", generate.seed}}},
      {"fit", fit.to_json()},
      {"classifier", classifier.to_json()},
      {"split", split.to_json()},
      {"sweep",
       {{"k_values", sweep.k_values},
        {"include_synthetic", sweep.include_synthetic},
        {"seeds", sweep.seeds},
        {"pool_seed", sweep.pool_seed},
        {"forgetting_margin", sweep.forgetting_margin},
        {"workers", sweep.workers}}},
      {"evaluate",
       {{"model", path_string(evaluate.model)},
        {"manifest", path_string(evaluate.manifest)},
        {"tag", evaluate.tag},
        {"model_tag", evaluate.model_tag},
        {"training_manifests", training}}},
  };
}

void PipelineConfig::validate() const {
  gan.validate();
  fit.validate();
  classifier.validate();
  if (preprocess.output_size == 0) throw ConfigError("config preprocess: output_size must be positive");
  for (double f : {preprocess.crop_fraction, generated_crop_fraction}) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("config preprocess: crop fractions must lie in (0, 1]");
  }
  gan::parse_identity_source_kind(identity_source.kind);
  if (generate.image_size == 0) throw ConfigError("config generate: image_size must be positive");
  if (paths.output_dir.empty()) throw ConfigError("config paths: output_dir must be set");
  for (std::size_t i = 1; i < sweep.k_values.size(); ++i) {
    if (sweep.k_values[i] <= sweep.k_values[i - 1]) throw ConfigError("config sweep: k_values must be strictly increasing");
  }
  if (sweep.seeds.empty()) throw ConfigError("config sweep: seeds must not be empty");
  if (!(sweep.forgetting_margin >= 0.0) || !std::isfinite(sweep.forgetting_margin)) {
    throw ConfigError("config sweep: forgetting_margin must be a nonnegative number");
  }
  if (sweep.workers == 0) throw ConfigError("config sweep: workers must be positive");
  std::set<std::string> tags;
  for (const auto& h : paths.heldout) {
    if (h.tag.empty() || h.manifest.empty()) throw ConfigError("config paths: heldout entries need a tag and a manifest");
    if (!tags.insert(h.tag).second) throw ConfigError("config paths: duplicate heldout tag '" + h.tag + "'");
  }
}

Override parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key.path=value");
  Override o{assignment.substr(0, eq), nullptr};
  const std::string text = assignment.substr(eq + 1);
  o.value = nlohmann::json::parse(text, nullptr, false);
  if (o.value.is_discarded()) o.value = text;
  return o;
}

void set_path(nlohmann::json& doc, const std::string& dotted, nlohmann::json value) {
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + dotted + "' has an empty component");
    if (node->is_null()) *node = nlohmann::json::object();
    if (!node->is_object()) throw ConfigError("override key '" + dotted + "' descends into a non-object");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

PipelineConfig load_config(const std::optional<fs::path>& config_path, const std::vector<Override>& overrides,
                           std::optional<std::uint64_t> seed) {
  nlohmann::json doc = nlohmann::json::object();
  if (config_path) {
    require_path(*config_path, "config file");
    doc = nlohmann::json::parse(read_file(*config_path), nullptr, false);
    if (doc.is_discarded()) throw ConfigError(config_path->string() + ": not valid JSON");
    if (!doc.is_object()) throw ConfigError(config_path->string() + ": expected a JSON object");
    absolutize(doc, fs::absolute(*config_path).parent_path());
  }
  nlohmann::json patch = nlohmann::json::object();
  for (const auto& o : overrides) set_path(patch, o.key, o.value);
  absolutize(patch, fs::current_path());
  merge(doc, patch);
  apply_seed(doc, false);
  if (seed) {
    doc["seed"] = *seed;
    apply_seed(doc, true);
  }
  PipelineConfig config = PipelineConfig::from_json(doc, fs::current_path());
  if (const char* env = std::getenv("FERGAN_CACHE_DIR"); env != nullptr && *env != '\0') {
    const bool flag_set = std::any_of(overrides.begin(), overrides.end(),
                                      [](const Override& o) { return o.key == "paths.cache_dir"; });
    if (!flag_set) config.paths.cache_dir = fs::absolute(env).lexically_normal();
  }
  config.validate();
  return config;
}

void require_path(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " is not set");
  std::error_code ec;
  if (!fs::exists(path, ec)) throw ConfigError(what + " not found: " + path.string());
}

}  // namespace fergan::cli
