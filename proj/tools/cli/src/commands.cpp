#include "fergan/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <ostream>
#include <sstream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "fergan/common/fs.hpp"
#include "fergan/common/hash.hpp"
#include "fergan/data/assemble.hpp"
#include "fergan/data/balance.hpp"
#include "fergan/data/cache.hpp"
#include "fergan/data/manifest.hpp"
#include "fergan/data/split.hpp"
#include "fergan/eval/report.hpp"
#include "fergan/fer/classifier.hpp"
#include "fergan/gan/procedural_corpus.hpp"
#include "fergan/sweep/sweep.hpp"

namespace fergan::cli {

namespace {

namespace fs = std::filesystem;

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void check_cancel(const Context& ctx) {
  if (ctx.cancel != nullptr && ctx.cancel->load()) throw Cancelled("interrupted");
}

void write_config(const PipelineConfig& config, const fs::path& dir) {
  ensure_directory(dir);
  write_file_atomic(dir / "config.json", config.to_json().dump(2) + "\n");
}

void require_input_size(const PipelineConfig& config, std::size_t input_size) {
  if (config.preprocess.output_size != input_size) {
    throw ConfigError("preprocess.output_size (" + std::to_string(config.preprocess.output_size) +
                      ") must equal the classifier input size (" + std::to_string(input_size) + ")");
  }
}

void require_identity_source_inputs(const PipelineConfig& config) {
  const auto kind = gan::parse_identity_source_kind(config.identity_source.kind);
  if (kind == gan::IdentitySourceKind::kCorpusSampler) {
    require_path(config.identity_source.corpus_manifest, "identity_source.corpus_manifest");
  } else if (kind == gan::IdentitySourceKind::kGenerativeModel) {
    require_path(config.identity_source.model_path, "identity_source.model_path");
  }
}

/// Keeps identities with exactly one record per emotion.
data::FaceDataset balanced_subset(const data::FaceDataset& dataset) {
  const data::BalanceReport report = data::validate_balance(dataset);
  if (report.balanced) return dataset;
  std::vector<std::string> keep;
  for (const auto& id : dataset.identities()) {
    if (std::find(report.offending_identities.begin(), report.offending_identities.end(), id) ==
        report.offending_identities.end()) {
      keep.push_back(id);
    }
  }
  spdlog::warn("dropping {} identities without exactly one image per emotion", report.offending_identities.size());
  return dataset.subset(keep);
}

nlohmann::json summarize(const std::vector<sweep::SweepRow>& rows, const std::vector<std::string>& tags,
                         double margin, std::ostream& out) {
  nlohmann::json best = nlohmann::json::object(), forgetting = nlohmann::json::object();
  for (const auto& tag : tags) {
    const sweep::BestK b = sweep::select_best_k(rows, tag);
    const auto threshold = sweep::detect_forgetting_threshold(rows, tag, margin);
    best[tag] = {{"k", b.k}, {"composition", sweep::composition_label(b.k)}, {"accuracy", b.accuracy}};
    forgetting[tag] = threshold ? nlohmann::json(*threshold) : nlohmann::json(nullptr);
    out << tag << ": best k = " << b.k << " (" << sweep::composition_label(b.k) << ", accuracy " << fixed(b.accuracy)
        << "), forgetting threshold = " << (threshold ? std::to_string(*threshold) : std::string("none")) << "\n";
  }
  return {{"rows", rows.size()}, {"forgetting_margin", margin}, {"best_k", best}, {"forgetting_threshold", forgetting}};
}

}  // namespace

data::FaceDataset load_manifest(const PipelineConfig& config, const fs::path& manifest, bool generated) {
  data::PreprocessOptions options = config.preprocess;
  if (!generated) {
    const auto records = data::read_manifest(manifest);
    generated = !records.empty() && std::all_of(records.begin(), records.end(),
                                                [](const data::ManifestRecord& r) { return r.provenance == "generated"; });
  }
  if (generated) options.crop_fraction = config.generated_crop_fraction;
  std::unique_ptr<data::PreprocessCache> cache;
  if (!config.paths.cache_dir.empty()) cache = std::make_unique<data::PreprocessCache>(config.paths.cache_dir);
  data::FaceDataset ds = data::load_corpus(manifest, options, cache.get());
  spdlog::info("loaded {} ({} identities, {} images{})", manifest.string(), ds.identity_count(), ds.size(),
               cache ? ", " + std::to_string(cache->hits()) + " cache hits" : std::string());
  return ds;
}

fs::path train_translator_command(const PipelineConfig& config, Context& ctx) {
  require_path(config.paths.corpus_manifest, "corpus manifest");
  const data::FaceDataset corpus = load_manifest(config, config.paths.corpus_manifest, false);
  const fs::path dir = config.paths.output_dir;
  write_config(config, dir);

  gan::TranslatorTrainOptions options;
  options.log_path = dir / "translator_log.csv";
  options.batch_manifest_path = dir / "translator_batches.csv";
  std::optional<gan::TranslatorStep> last;
  const std::size_t every = std::max<std::size_t>(1, config.gan.steps / 20);
  options.on_step = [&](const gan::TranslatorStep& s) {
    check_cancel(ctx);
    last = s;
    if (s.step % every == 0 || s.step + 1 == config.gan.steps) {
      spdlog::info("step {}/{} adversarial {:.4f} classification {:.4f} reconstruction {:.4f}", s.step + 1,
                   config.gan.steps, s.losses.adversarial, s.losses.classification, s.losses.reconstruction);
    }
  };
  const gan::TranslatorCheckpoint checkpoint = gan::train_translator(corpus, config.gan, options);
  const fs::path path = dir / "translator.bin";
  gan::save_checkpoint(path, checkpoint);
  ctx.out << "checkpoint: " << path.string() << "\n";
  ctx.out << "steps: " << checkpoint.step << "\n";
  if (last) {
    ctx.out << "final losses: adversarial " << fixed(last->losses.adversarial) << ", classification "
            << fixed(last->losses.classification) << ", reconstruction " << fixed(last->losses.reconstruction) << "\n";
  }
  return path;
}

fs::path generate_command(const PipelineConfig& config, Context& ctx) {
  require_path(config.paths.checkpoint, "translator checkpoint");
  require_identity_source_inputs(config);
  if (config.generate.identities == 0) throw ConfigError("generate.identities must be positive");
  const gan::TranslatorCheckpoint checkpoint = gan::load_translator_checkpoint(config.paths.checkpoint);
  const auto source = gan::make_identity_source(config.identity_source);
  const fs::path dir = config.paths.output_dir;
  write_config(config, dir);

  data::AssembleOptions options;
  options.output_size = config.generate.image_size;
  options.id_prefix = config.generate.id_prefix;
  const std::size_t every = std::max<std::size_t>(1, config.generate.identities / 10);
  options.on_progress = [&](std::size_t done, std::size_t total) {
    check_cancel(ctx);
    if (done % every == 0 || done == total) spdlog::info("generated {}/{} identities", done, total);
  };
  const data::FaceDataset generated =
      data::assemble_generated(config.generate.identities, checkpoint, *source, config.generate.seed, options);
  const data::FaceDataset saved = data::save_dataset(generated, dir);
  const data::BalanceReport balance = data::validate_balance(saved);
  if (!balance.balanced) throw DataError("generated dataset is not balanced");
  const fs::path manifest = dir / "manifest.csv";
  ctx.out << "manifest: " << manifest.string() << "\n";
  ctx.out << "identities: " << saved.identity_count() << ", images: " << saved.size() << "\n";
  return manifest;
}

fs::path assemble_command(const PipelineConfig& config, Context& ctx) {
  require_path(config.paths.corpus_manifest, "corpus manifest");
  const data::FaceDataset corpus = balanced_subset(load_manifest(config, config.paths.corpus_manifest, false));
  const data::SplitCounts counts = data::resolve_split(config.split, corpus.identity_count());
  const fs::path dir = config.paths.output_dir;
  write_config(config, dir);
  const data::FaceDataset saved = data::save_dataset(corpus, dir);
  const data::DatasetSplit split = data::split_by_identity(saved, config.split);
  data::write_manifest(split.train, dir / "train.csv");
  data::write_manifest(split.val, dir / "val.csv");
  data::write_manifest(split.test, dir / "test.csv");
  ctx.out << "manifest: " << (dir / "manifest.csv").string() << "\n";
  ctx.out << "identities: " << saved.identity_count() << " (train " << counts.train << ", val " << counts.val
          << ", test " << counts.test << ")\n";
  return dir / "manifest.csv";
}

fs::path train_fer_command(const PipelineConfig& config, Context& ctx) {
  require_path(config.paths.train_manifest, "training manifest");
  if (!config.paths.val_manifest.empty()) require_path(config.paths.val_manifest, "validation manifest");
  require_input_size(config, config.classifier.input_size);
  const data::FaceDataset train = load_manifest(config, config.paths.train_manifest, false);
  const data::FaceDataset val =
      config.paths.val_manifest.empty() ? data::FaceDataset{} : load_manifest(config, config.paths.val_manifest, false);
  const fs::path dir = config.paths.output_dir;
  write_config(config, dir);

  fer::FitOptions options;
  options.on_epoch = [&](const fer::EpochRecord& e) {
    check_cancel(ctx);
    spdlog::info("epoch {} loss {:.4f} train_acc {:.4f}{}", e.epoch, e.train_loss, e.train_acc,
                 e.val_acc ? fmt::format(" val_acc {:.4f}", *e.val_acc) : std::string());
  };
  const fer::FitResult result = fer::train_classifier(train, val, config.fit, config.classifier, options);
  const fs::path path = dir / "classifier.bin";
  fer::save_classifier(path, result.model);
  write_file_atomic(dir / "training_log.csv", result.log.to_csv());
  ctx.out << "classifier: " << path.string() << "\n";
  if (result.log.best) {
    const auto& best = result.log.epochs[*result.log.best];
    ctx.out << "best epoch: " << best.epoch << " of " << result.log.epochs.size() << ", train_acc "
            << fixed(best.train_acc);
    if (best.val_acc) ctx.out << ", val_acc " << fixed(*best.val_acc);
    ctx.out << "\n";
  }
  return path;
}

fs::path evaluate_command(const PipelineConfig& config, Context& ctx) {
  const EvaluateSection& e = config.evaluate;
  require_path(e.model, "evaluate.model");
  require_path(e.manifest, "evaluate.manifest");
  for (const auto& m : e.training_manifests) require_path(m, "training manifest");
  const fer::Classifier model = fer::load_classifier(e.model);
  require_input_size(config, model.spec.input_size);
  const data::FaceDataset dataset = load_manifest(config, e.manifest, false);
  const eval::EvaluationReport report =
      e.training_manifests.empty()
          ? eval::evaluate(model, dataset, e.model_tag, e.tag)
          : eval::cross_database_evaluate(model, dataset, e.training_manifests, e.model_tag, e.tag);
  write_config(config, config.paths.output_dir);
  const auto paths = eval::write_report(report, config.paths.output_dir / "reports");
  ctx.out << "accuracy: " << fixed(report.accuracy) << " on " << report.confusion.total() << " images"
          << (report.cross_database ? " (cross-database)" : "") << "\n";
  ctx.out << "report: " << paths[0].string() << "\n";
  return paths[0];
}

int sweep_command(const PipelineConfig& config, Context& ctx) {
  require_path(config.paths.corpus_manifest, "corpus manifest");
  for (const auto& h : config.paths.heldout) require_path(h.manifest, "held-out manifest '" + h.tag + "'");
  if (!config.paths.pool_manifest.empty()) {
    require_path(config.paths.pool_manifest, "generated pool manifest");
  } else {
    require_path(config.paths.checkpoint, "translator checkpoint");
    require_identity_source_inputs(config);
  }
  require_input_size(config, config.classifier.input_size);
  const fs::path dir = config.paths.output_dir;

  sweep::ExperimentPlan plan;
  plan.k_values = config.sweep.k_values;
  plan.include_synthetic = config.sweep.include_synthetic;
  plan.split = config.split;
  plan.fit = config.fit;
  plan.classifier = config.classifier;
  plan.seeds = config.sweep.seeds;
  plan.pool_seed = config.sweep.pool_seed;
  plan.forgetting_margin = config.sweep.forgetting_margin;
  plan.output_dir = dir;
  plan.real = load_manifest(config, config.paths.corpus_manifest, false);
  for (const auto& h : config.paths.heldout) plan.heldout.push_back({h.tag, load_manifest(config, h.manifest, false)});
  write_config(config, dir);

  fs::path pool_manifest = config.paths.pool_manifest;
  if (pool_manifest.empty()) {
    // Generate exactly what the plan consumes; reuse a previous pool built from the same inputs.
    const std::size_t needed = plan.pool_identities_needed();
    const fs::path pool_dir = dir / "pool";
    pool_manifest = pool_dir / "manifest.csv";
    const nlohmann::json recipe{{"checkpoint", sha256_file(config.paths.checkpoint)},
                                {"identity_source", config.to_json().at("identity_source")},
                                {"generate", config.to_json().at("generate")},
                                {"identities", needed}};
    const fs::path recipe_path = pool_dir / "pool.json";
    const bool reuse = fs::exists(pool_manifest) && fs::exists(recipe_path) &&
                       nlohmann::json::parse(read_file(recipe_path), nullptr, false) == recipe;
    if (reuse) {
      spdlog::info("reusing generated pool at {}", pool_dir.string());
    } else if (needed > 0) {
      spdlog::info("generating a pool of {} identities", needed);
      PipelineConfig pool_config = config;
      pool_config.generate.identities = needed;
      pool_config.paths.output_dir = pool_dir;
      std::ostringstream sink;
      Context pool_ctx{sink, ctx.cancel};
      generate_command(pool_config, pool_ctx);
      write_file_atomic(recipe_path, recipe.dump(2) + "\n");
    }
  }
  if (!pool_manifest.empty() && fs::exists(pool_manifest)) plan.pool = load_manifest(config, pool_manifest, true);
  plan.validate();

  sweep::RunOptions options;
  options.cancel = ctx.cancel;
  options.workers = config.sweep.workers;
  options.on_message = [](const std::string& m) { spdlog::info("{}", m); };
  options.on_row = [&](const sweep::SweepRow& r) {
    std::string line = r.model_tag + ": train " + fixed(r.train_acc) + ", test " + fixed(r.test_acc);
    for (const auto& [tag, acc] : r.heldout_acc) line += ", " + tag + " " + fixed(acc);
    ctx.out << line << "\n" << std::flush;
  };
  const sweep::SweepResult result = sweep::run_sweep(plan, options);
  ctx.out << "sweep: " << (dir / "sweep.csv").string() << " (" << result.rows.size() << " rows)\n";
  if (!result.complete) {
    ctx.out << "incomplete: " << result.failure << "\n";
    return result.rows.empty() ? kExitRuntime : kExitPartial;
  }
  std::vector<std::string> tags;
  for (const auto& h : plan.heldout) tags.push_back(h.tag);
  nlohmann::json summary = summarize(result.rows, tags, plan.forgetting_margin, ctx.out);
  summary["complete"] = true;
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
  return kExitOk;
}

fs::path report_command(const fs::path& sweep_dir, const std::vector<std::string>& heldout_tags, double margin,
                        Context& ctx) {
  const fs::path rows_path = sweep_dir / "rows.json";
  require_path(rows_path, "sweep rows");
  const auto doc = nlohmann::json::parse(read_file(rows_path), nullptr, false);
  if (doc.is_discarded() || !doc.contains("rows")) throw DataError(rows_path.string() + ": malformed rows file");
  std::vector<sweep::SweepRow> rows;
  for (const auto& r : doc.at("rows")) rows.push_back(sweep::SweepRow::from_json(r));
  if (rows.empty()) throw DataError(rows_path.string() + ": no rows");
  std::vector<std::string> tags = heldout_tags;
  if (tags.empty()) {
    for (const auto& [tag, acc] : rows.front().heldout_acc) tags.push_back(tag);
  }
  const auto paths = sweep::emit_outputs(rows, tags, sweep_dir);
  const nlohmann::json summary = summarize(rows, tags, margin, ctx.out);
  write_file_atomic(sweep_dir / "summary.json", summary.dump(2) + "\n");
  ctx.out << "wrote " << paths.size() << " files under " << sweep_dir.string() << "\n";
  return paths.front();
}

fs::path toy_corpus_command(const ToyCorpusOptions& options, const fs::path& dir, Context& ctx) {
  if (options.identities == 0) throw ConfigError("toy corpus needs at least one identity");
  if (options.image_size < 8) throw ConfigError("toy corpus image size must be at least 8");
  gan::ProceduralCorpusOptions o;
  o.identities = options.identities;
  o.image_size = options.image_size;
  o.style = options.style;
  o.seed = options.seed;
  o.id_prefix = options.id_prefix;
  o.source_db = options.source_db;
  const data::FaceDataset saved = data::save_dataset(gan::make_procedural_corpus(o), dir);
  const fs::path manifest = dir / "manifest.csv";
  ctx.out << "manifest: " << manifest.string() << "\n";
  ctx.out << "identities: " << saved.identity_count() << ", images: " << saved.size() << "\n";
  return manifest;
}

namespace {

/// Flags shared by every pipeline subcommand.
struct CommonFlags {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string cache_dir;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "JSON config document");
  cmd->add_option("--set", f.sets, "Override a config key: section.key=value (JSON value)");
  cmd->add_option("--seed", f.seed, "Global seed; replaces every sub-seed");
  cmd->add_option("-o,--output", f.output, "Output directory (paths.output_dir)");
  cmd->add_option("--cache-dir", f.cache_dir, "Preprocessing cache (paths.cache_dir)");
  cmd->add_flag("-q,--quiet", f.quiet, "Only log warnings and errors");
}

std::vector<nlohmann::json> parse_k_list(const std::string& text) {
  std::vector<nlohmann::json> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.emplace_back(v);
    } catch (const std::exception&) {
      throw ConfigError("--k expects comma-separated integers, got '" + text + "'");
    }
  }
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
  CLI::App app{"fergan: balanced facial-expression synthesis and augmentation sweeps", "fergan"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fergan 0.1.0");

  CommonFlags common;
  std::string corpus, pool, checkpoint, train, val, model, manifest, tag, model_tag, k_list, sweep_dir;
  std::vector<std::string> heldout, training_manifests;
  std::optional<std::size_t> steps, identities, epochs, workers;
  std::optional<double> margin;

  auto* train_translator = app.add_subcommand("train-translator", "Train the expression translator");
  add_common(train_translator, common);
  train_translator->add_option("--corpus", corpus, "Real corpus manifest");
  train_translator->add_option("--steps", steps, "Training steps (gan.steps)");

  auto* generate = app.add_subcommand("generate", "Synthesize a balanced dataset of new identities");
  add_common(generate, common);
  generate->add_option("--checkpoint", checkpoint, "Translator checkpoint");
  generate->add_option("-n,--identities", identities, "Identities to generate");

  auto* assemble = app.add_subcommand("assemble", "Balance a real corpus and split it by identity");
  add_common(assemble, common);
  assemble->add_option("--corpus", corpus, "Real corpus manifest");

  auto* train_fer = app.add_subcommand("train-fer", "Train the expression classifier");
  add_common(train_fer, common);
  train_fer->add_option("--train", train, "Training manifest");
  train_fer->add_option("--val", val, "Validation manifest");
  train_fer->add_option("--epochs", epochs, "Epochs (fit.epochs)");

  auto* evaluate = app.add_subcommand("evaluate", "Score a classifier on a manifest");
  add_common(evaluate, common);
  evaluate->add_option("--model", model, "Classifier checkpoint");
  evaluate->add_option("--manifest", manifest, "Manifest to score");
  evaluate->add_option("--tag", tag, "Dataset tag for the report");
  evaluate->add_option("--model-tag", model_tag, "Model tag for the report");
  evaluate->add_option("--training-manifest", training_manifests,
                       "Manifest the model was trained on; makes the run cross-database");

  auto* sweep = app.add_subcommand("sweep", "Run the real / synthetic / mixed augmentation sweep");
  add_common(sweep, common);
  sweep->add_option("--corpus", corpus, "Real corpus manifest");
  sweep->add_option("--pool", pool, "Generated pool manifest; generated from --checkpoint when absent");
  sweep->add_option("--checkpoint", checkpoint, "Translator checkpoint");
  sweep->add_option("--k", k_list, "Comma-separated k values");
  sweep->add_option("--heldout", heldout, "Held-out set as tag=manifest");
  sweep->add_option("--workers", workers, "Sweep points trained concurrently");
  sweep->add_option("--epochs", epochs, "Epochs per point (fit.epochs)");

  auto* report = app.add_subcommand("report", "Re-render plots, reports and best-k summary of a sweep");
  add_common(report, common);
  report->add_option("--sweep-dir", sweep_dir, "Sweep output directory (defaults to paths.output_dir)");
  report->add_option("--margin", margin, "Forgetting margin");

  ToyCorpusOptions toy;
  std::string toy_style = "studio", toy_output = "toy-corpus";
  bool toy_quiet = false;
  auto* toy_corpus = app.add_subcommand("toy-corpus", "Render a procedural face corpus with a manifest");
  toy_corpus->add_option("-n,--identities", toy.identities, "Identities")->capture_default_str();
  toy_corpus->add_option("--size", toy.image_size, "Image side in pixels")->capture_default_str();
  toy_corpus->add_option("--style", toy_style, "studio or field")->capture_default_str();
  toy_corpus->add_option("--seed", toy.seed, "Seed")->capture_default_str();
  toy_corpus->add_option("--prefix", toy.id_prefix, "Identity id prefix")->capture_default_str();
  toy_corpus->add_option("--source-db", toy.source_db, "source_db column")->capture_default_str();
  toy_corpus->add_option("-o,--output", toy_output, "Output directory")->capture_default_str();
  toy_corpus->add_flag("-q,--quiet", toy_quiet, "Only log warnings and errors");

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("fergan", sink);
  logger->set_pattern("[%H:%M:%S] %^%l%$ %v");
  const auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> logger;
    ~Restore() { spdlog::set_default_logger(logger); }
  } restore{previous};

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  logger->set_level(common.quiet || toy_quiet ? spdlog::level::warn : spdlog::level::info);

  Context ctx{out, cancel};
  try {
    if (toy_corpus->parsed()) {
      toy.style = gan::parse_face_style(toy_style);
      toy_corpus_command(toy, fs::absolute(toy_output), ctx);
      return kExitOk;
    }

    std::vector<Override> overrides;
    for (const auto& s : common.sets) overrides.push_back(parse_override(s));
    auto flag = [&](const char* key, nlohmann::json value) { overrides.push_back({key, std::move(value)}); };
    if (!common.output.empty()) flag("paths.output_dir", common.output);
    if (!common.cache_dir.empty()) flag("paths.cache_dir", common.cache_dir);
    if (!corpus.empty()) flag("paths.corpus_manifest", corpus);
    if (!pool.empty()) flag("paths.pool_manifest", pool);
    if (!checkpoint.empty()) flag("paths.checkpoint", checkpoint);
    if (!train.empty()) flag("paths.train_manifest", train);
    if (!val.empty()) flag("paths.val_manifest", val);
    if (!model.empty()) flag("evaluate.model", model);
    if (!manifest.empty()) flag("evaluate.manifest", manifest);
    if (!tag.empty()) flag("evaluate.tag", tag);
    if (!model_tag.empty()) flag("evaluate.model_tag", model_tag);
    if (!training_manifests.empty()) flag("evaluate.training_manifests", training_manifests);
    if (steps) flag("gan.steps", *steps);
    if (identities) flag("generate.identities", *identities);
    if (epochs) flag("fit.epochs", *epochs);
    if (workers) flag("sweep.workers", *workers);
    if (margin) flag("sweep.forgetting_margin", *margin);
    if (!k_list.empty()) flag("sweep.k_values", parse_k_list(k_list));
    if (!heldout.empty()) {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& h : heldout) {
        const auto eq = h.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--heldout expects tag=manifest, got '" + h + "'");
        list.push_back({{"tag", h.substr(0, eq)}, {"manifest", h.substr(eq + 1)}});
      }
      flag("paths.heldout", list);
    }
    const std::optional<fs::path> config_path =
        common.config.empty() ? std::nullopt : std::optional<fs::path>(common.config);
    const PipelineConfig config = load_config(config_path, overrides, common.seed);

    if (train_translator->parsed()) {
      train_translator_command(config, ctx);
    } else if (generate->parsed()) {
      generate_command(config, ctx);
    } else if (assemble->parsed()) {
      assemble_command(config, ctx);
    } else if (train_fer->parsed()) {
      train_fer_command(config, ctx);
    } else if (evaluate->parsed()) {
      evaluate_command(config, ctx);
    } else if (sweep->parsed()) {
      return sweep_command(config, ctx);
    } else if (report->parsed()) {
      std::vector<std::string> tags;
      for (const auto& h : config.paths.heldout) tags.push_back(h.tag);
      report_command(sweep_dir.empty() ? config.paths.output_dir : fs::absolute(sweep_dir), tags,
                     config.sweep.forgetting_margin, ctx);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
}

}  // namespace fergan::cli
