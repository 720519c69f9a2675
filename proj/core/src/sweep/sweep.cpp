#include "fergan/sweep/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "fergan/common/fs.hpp"
#include "fergan/common/hash.hpp"
#include "fergan/data/manifest.hpp"
#include "fergan/data/mixing.hpp"
#include "fergan/eval/charts.hpp"

namespace fergan::sweep {

namespace {

bool valid_tag(const std::string& tag) {
  if (tag.empty()) return false;
  return std::all_of(tag.begin(), tag.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
  });
}

std::size_t max_k(const ExperimentPlan& plan) { return plan.k_values.empty() ? 0 : plan.k_values.back(); }

/// Units of generated identities each split's sub-pool must hold.
std::size_t pool_units(const ExperimentPlan& plan) {
  return std::max<std::size_t>(max_k(plan), plan.include_synthetic ? 1 : 0);
}

std::string format_accuracy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void check_cancel(const RunOptions& options) {
  if (options.cancel != nullptr && options.cancel->load()) throw Cancelled("sweep cancelled");
}

void say(const RunOptions& options, const std::string& message) {
  if (options.on_message) options.on_message(message);
}

/// Real splits plus one generated sub-pool per split, cut from the shuffled pool.
struct Layout {
  data::DatasetSplit real;
  data::FaceDataset pool_train, pool_val, pool_test;
};

Layout make_layout(const ExperimentPlan& plan) {
  Layout l;
  l.real = data::split_by_identity(plan.real, plan.split);
  const std::size_t units = pool_units(plan);
  const std::size_t nt = units * l.real.train.identity_count(), nv = units * l.real.val.identity_count(),
                    ne = units * l.real.test.identity_count();
  if (plan.pool.identity_count() < nt + nv + ne) {
    throw DataError("generated pool holds " + std::to_string(plan.pool.identity_count()) + " identities, the plan needs " +
                    std::to_string(nt + nv + ne));
  }
  if (units == 0) return l;
  const data::FaceDataset shuffled = data::shuffle_identities(plan.pool, plan.pool_seed);
  l.pool_train = data::take_identities(shuffled, 0, nt);
  l.pool_val = data::take_identities(shuffled, nt, nv);
  l.pool_test = data::take_identities(shuffled, nt + nv, ne);
  return l;
}

PointData point_data(const Layout& l, std::optional<std::size_t> k, bool synthetic) {
  if (synthetic) {
    return {data::take_identities(l.pool_train, 0, l.real.train.identity_count()),
            data::take_identities(l.pool_val, 0, l.real.val.identity_count()),
            data::take_identities(l.pool_test, 0, l.real.test.identity_count())};
  }
  const std::size_t units = k.value_or(0);
  return {data::mix(l.real.train, units, l.pool_train), data::mix(l.real.val, units, l.pool_val),
          data::mix(l.real.test, units, l.pool_test)};
}

std::string model_tag(std::optional<std::size_t> k, bool synthetic, std::uint64_t seed) {
  const std::string s = "_s" + std::to_string(seed);
  if (synthetic) return "synthetic" + s;
  if (k.value_or(0) == 0) return "real" + s;
  return "mix_k" + std::to_string(*k) + s;
}

SweepRow train_point(const ExperimentPlan& plan, const PointData& d, std::optional<std::size_t> k, bool synthetic,
                     std::uint64_t seed, const RunOptions& options) {
  check_cancel(options);
  if (d.train.empty()) throw DataError("sweep point has no training identities");
  const std::string tag = model_tag(k, synthetic, seed);
  const std::filesystem::path dir = plan.output_dir / "points" / tag;
  ensure_directory(dir);
  data::write_manifest(d.train, dir / "train.csv");
  data::write_manifest(d.val, dir / "val.csv");
  data::write_manifest(d.test, dir / "test.csv");
  say(options, tag + ": training on " + std::to_string(d.train.identity_count()) + " identities, " +
                   std::to_string(d.train.size()) + " images");

  fer::FitConfig fit = plan.fit;
  fit.seed = seed;
  fer::FitOptions fit_options;
  fit_options.on_epoch = [&](const fer::EpochRecord& e) {
    check_cancel(options);
    std::string line = tag + " epoch " + std::to_string(e.epoch) + " loss " + format_accuracy(e.train_loss) +
                       " acc " + format_accuracy(e.train_acc);
    if (e.val_acc) line += " val " + format_accuracy(*e.val_acc);
    say(options, line);
  };
  fer::FitResult fitted = fer::train_classifier(d.train, d.val, fit, plan.classifier, fit_options);
  const auto& log = fitted.log;
  if (!log.best) throw TrainingError(tag + ": training ran no epochs");

  SweepRow row;
  row.k = synthetic ? std::nullopt : std::optional<std::size_t>(k.value_or(0));
  row.composition = composition_label(row.k);
  row.model_tag = tag;
  row.seed = seed;
  row.train_identities = d.train.identity_count();
  row.train_images = d.train.size();
  row.best_epoch = log.epochs[*log.best].epoch;
  row.epochs_run = log.epochs.size();
  row.train_acc = log.epochs[*log.best].train_acc;
  row.final_train_acc = log.epochs.back().train_acc;

  nlohmann::json extra{{"model_tag", tag}, {"composition", row.composition}, {"seed", seed}};
  fer::save_classifier(dir / "classifier.bin", fitted.model, extra);
  write_file_atomic(dir / "training_log.csv", log.to_csv());

  eval::EvaluationReport test = eval::evaluate(fitted.model, d.test, tag, "test");
  row.test_acc = test.accuracy;
  row.reports.push_back(std::move(test));
  const std::vector<eval::TrainingFootprint> footprint{eval::TrainingFootprint::of(d.train),
                                                      eval::TrainingFootprint::of(d.val)};
  for (const auto& h : plan.heldout) {
    eval::EvaluationReport r = eval::cross_database_evaluate(fitted.model, h.dataset, footprint, tag, h.tag);
    row.heldout_acc.emplace_back(h.tag, r.accuracy);
    row.reports.push_back(std::move(r));
  }
  return row;
}

std::vector<std::string> heldout_tags(const ExperimentPlan& plan) {
  std::vector<std::string> tags;
  for (const auto& h : plan.heldout) tags.push_back(h.tag);
  return tags;
}

std::string dataset_fingerprint(const data::FaceDataset& ds) {
  std::string bytes;
  for (const auto& r : ds.records()) {
    bytes += r.identity_id + '\n' + std::string(to_string(r.emotion)) + '\n' +
             std::string(data::to_string(r.provenance)) + '\n' + r.source_db + '\n' + r.path.generic_string() + '\n';
    const auto v = r.image.values();
    bytes.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
  }
  return sha256_hex(bytes);
}

/// Mean of the selected accuracy per k, over rows that have a k. Values are
/// summed in sorted order so the result does not depend on row order.
std::map<std::size_t, double> mean_by_k(const std::vector<SweepRow>& rows, const std::string& heldout_tag) {
  std::map<std::size_t, std::vector<double>> values;
  for (const auto& r : rows) {
    if (!r.k) continue;
    const auto acc = r.heldout(heldout_tag);
    if (!acc) throw DataError("row " + r.model_tag + " has no accuracy for held-out set '" + heldout_tag + "'");
    values[*r.k].push_back(*acc);
  }
  std::map<std::size_t, double> means;
  for (auto& [k, v] : values) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    means[k] = sum / static_cast<double>(v.size());
  }
  return means;
}

std::string plot_svg(const std::vector<SweepRow>& rows, const std::vector<std::string>& tags) {
  std::vector<std::string> labels;
  std::map<std::string, std::vector<const SweepRow*>> by_label;
  for (const auto& r : rows) {
    if (!by_label.contains(r.composition)) labels.push_back(r.composition);
    by_label[r.composition].push_back(&r);
  }
  auto series = [&](const std::string& name, auto value) {
    eval::LineSeries s{name, {}};
    for (const auto& label : labels) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const SweepRow* r : by_label[label]) {
        if (const auto v = value(*r)) {
          sum += *v;
          ++n;
        }
      }
      s.values.push_back(n == 0 ? std::nan("") : sum / static_cast<double>(n));
    }
    return s;
  };
  std::vector<eval::LineSeries> lines{
      series("train", [](const SweepRow& r) { return std::optional<double>(r.train_acc); }),
      series("test", [](const SweepRow& r) { return std::optional<double>(r.test_acc); })};
  for (const auto& tag : tags) lines.push_back(series(tag, [&](const SweepRow& r) { return r.heldout(tag); }));
  return eval::line_plot_svg(labels, lines, "Accuracy by dataset composition", "accuracy");
}

struct Job {
  std::optional<std::size_t> k;
  bool synthetic = false;
  std::uint64_t seed = 0;
};

}  // namespace

void ExperimentPlan::validate() const {
  for (std::size_t i = 1; i < k_values.size(); ++i) {
    if (k_values[i] <= k_values[i - 1]) throw ConfigError("k_values must be strictly increasing");
  }
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("sweep seeds must be distinct");
  }
  if (!(forgetting_margin >= 0.0) || !std::isfinite(forgetting_margin)) {
    throw ConfigError("forgetting_margin must be a nonnegative number");
  }
  if (output_dir.empty()) throw ConfigError("sweep needs an output directory");
  fit.validate();
  classifier.validate();
  std::set<std::string> tags;
  for (const auto& h : heldout) {
    if (!valid_tag(h.tag)) throw ConfigError("held-out tag '" + h.tag + "' must be nonempty [A-Za-z0-9_-]");
    if (!tags.insert(h.tag).second) throw ConfigError("duplicate held-out tag '" + h.tag + "'");
    if (h.dataset.empty()) throw DataError("held-out set '" + h.tag + "' is empty");
  }

  if (real.empty()) throw DataError("sweep needs a nonempty real corpus");
  const data::SplitCounts counts = data::resolve_split(split, real.identity_count());
  if (counts.train == 0) throw ConfigError("split leaves no training identities");
  if (counts.test == 0) throw ConfigError("split leaves no test identities");
  if (pool.identity_count() < pool_identities_needed()) {
    throw DataError("generated pool holds " + std::to_string(pool.identity_count()) + " identities; k = " +
                    std::to_string(max_k(*this)) + " needs " + std::to_string(pool_identities_needed()));
  }
  for (const auto* ds : {&real, &pool}) {
    for (const auto& r : ds->records()) {
      if (r.path.empty()) throw DataError("sweep record of " + r.identity_id + " has no image path");
      if (r.image.height() != classifier.input_size || r.image.width() != classifier.input_size ||
          r.image.channels() != classifier.input_channels) {
        throw ConfigError("images of " + r.identity_id + " do not match the classifier input size " +
                          std::to_string(classifier.input_size));
      }
    }
  }
  for (const auto& r : pool.records()) {
    if (real.contains_identity(r.identity_id)) {
      throw DataError("identity " + r.identity_id + " is in both the real corpus and the generated pool");
    }
  }
  // Held-out sets must stay blind to every point, so check against everything up front.
  const std::vector<eval::TrainingFootprint> everything{eval::TrainingFootprint::of(real),
                                                       eval::TrainingFootprint::of(pool)};
  for (const auto& h : heldout) eval::check_disjoint(h.dataset, everything);
}

std::size_t ExperimentPlan::pool_identities_needed() const { return pool_units(*this) * real.identity_count(); }

std::optional<double> SweepRow::heldout(const std::string& tag) const {
  for (const auto& [t, acc] : heldout_acc) {
    if (t == tag) return acc;
  }
  return std::nullopt;
}

nlohmann::json SweepRow::to_json() const {
  nlohmann::json held = nlohmann::json::array(), reps = nlohmann::json::array();
  for (const auto& [tag, acc] : heldout_acc) held.push_back({{"tag", tag}, {"accuracy", acc}});
  for (const auto& r : reports) reps.push_back(r.to_json());
  return {{"k", k ? nlohmann::json(*k) : nlohmann::json(nullptr)},
          {"composition", composition},
          {"train_acc", train_acc},
          {"test_acc", test_acc},
          {"heldout", held},
          {"model_tag", model_tag},
          {"seed", seed},
          {"train_identities", train_identities},
          {"train_images", train_images},
          {"best_epoch", best_epoch},
          {"epochs_run", epochs_run},
          {"final_train_acc", final_train_acc},
          {"reports", reps}};
}

SweepRow SweepRow::from_json(const nlohmann::json& doc) {
  SweepRow r;
  try {
    if (!doc.at("k").is_null()) r.k = doc.at("k").get<std::size_t>();
    r.composition = doc.at("composition").get<std::string>();
    r.train_acc = doc.at("train_acc").get<double>();
    r.test_acc = doc.at("test_acc").get<double>();
    for (const auto& h : doc.at("heldout")) {
      r.heldout_acc.emplace_back(h.at("tag").get<std::string>(), h.at("accuracy").get<double>());
    }
    r.model_tag = doc.at("model_tag").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.train_identities = doc.at("train_identities").get<std::size_t>();
    r.train_images = doc.at("train_images").get<std::size_t>();
    r.best_epoch = doc.at("best_epoch").get<std::size_t>();
    r.epochs_run = doc.at("epochs_run").get<std::size_t>();
    r.final_train_acc = doc.at("final_train_acc").get<double>();
    for (const auto& rep : doc.at("reports")) r.reports.push_back(eval::EvaluationReport::from_json(rep));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed sweep row: ") + e.what());
  }
  return r;
}

std::string composition_label(std::optional<std::size_t> k) {
  if (!k) return "GFEs";
  if (*k == 0) return "RFEs";
  return "RFEs + " + std::to_string(*k) + " × GFEs";
}

PointData point_data(const ExperimentPlan& plan, std::optional<std::size_t> k, bool synthetic) {
  return point_data(make_layout(plan), k, synthetic);
}

SweepRow run_experiment_real(const ExperimentPlan& plan, std::uint64_t seed, const RunOptions& options) {
  return train_point(plan, point_data(plan, 0, false), 0, false, seed, options);
}

SweepRow run_experiment_synthetic(const ExperimentPlan& plan, std::uint64_t seed, const RunOptions& options) {
  return train_point(plan, point_data(plan, std::nullopt, true), std::nullopt, true, seed, options);
}

SweepRow run_point(const ExperimentPlan& plan, std::size_t k, std::uint64_t seed, const RunOptions& options) {
  return train_point(plan, point_data(plan, k, false), k, false, seed, options);
}

std::string plan_digest(const ExperimentPlan& plan) {
  nlohmann::json held = nlohmann::json::array();
  for (const auto& h : plan.heldout) held.push_back({{"tag", h.tag}, {"data", dataset_fingerprint(h.dataset)}});
  const nlohmann::json doc{{"k_values", plan.k_values},
                           {"include_synthetic", plan.include_synthetic},
                           {"real", dataset_fingerprint(plan.real)},
                           {"pool", dataset_fingerprint(plan.pool)},
                           {"split", plan.split.to_json()},
                           {"fit", plan.fit.to_json()},
                           {"classifier", plan.classifier.to_json()},
                           {"heldout", held},
                           {"seeds", plan.seeds},
                           {"pool_seed", plan.pool_seed}};
  return sha256_hex(doc.dump());
}

SweepResult run_sweep(const ExperimentPlan& plan, const RunOptions& options) {
  plan.validate();
  ensure_directory(plan.output_dir);
  const std::string digest = plan_digest(plan);
  const std::vector<std::string> tags = heldout_tags(plan);
  const std::filesystem::path rows_path = plan.output_dir / "rows.json";

  std::vector<Job> jobs;
  for (std::uint64_t seed : plan.seeds) {
    jobs.push_back({0, false, seed});
    if (plan.include_synthetic) jobs.push_back({std::nullopt, true, seed});
    for (std::size_t k : plan.k_values) {
      if (k > 0) jobs.push_back({k, false, seed});
    }
  }
  std::vector<std::optional<SweepRow>> done(jobs.size());

  if (std::filesystem::exists(rows_path)) {
    nlohmann::json previous;
    try {
      previous = nlohmann::json::parse(read_file(rows_path));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(rows_path.string() + ": " + e.what());
    }
    if (previous.value("plan_digest", std::string()) == digest) {
      std::map<std::string, SweepRow> by_tag;
      for (const auto& r : previous.at("rows")) {
        SweepRow row = SweepRow::from_json(r);
        by_tag.emplace(row.model_tag, std::move(row));
      }
      for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto it = by_tag.find(model_tag(jobs[i].k, jobs[i].synthetic, jobs[i].seed));
        if (it != by_tag.end()) {
          say(options, it->first + ": reusing persisted row");
          done[i] = it->second;
        }
      }
    } else {
      say(options, "existing rows.json belongs to a different plan; starting over");
    }
  }

  const Layout layout = make_layout(plan);
  std::mutex mutex;
  auto completed_rows = [&] {
    std::vector<SweepRow> rows;
    for (const auto& r : done) {
      if (r) rows.push_back(*r);
    }
    return rows;
  };
  auto persist = [&] {
    const auto rows = completed_rows();
    nlohmann::json doc{{"plan_digest", digest}, {"rows", nlohmann::json::array()}};
    for (const auto& r : rows) doc["rows"].push_back(r.to_json());
    write_file_atomic(rows_path, doc.dump(1) + "\n");
    write_file_atomic(plan.output_dir / "sweep.csv", format_sweep_csv(rows, tags));
    if (!rows.empty()) write_file_atomic(plan.output_dir / "sweep.svg", plot_svg(rows, tags));
  };

  SweepResult result;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard lock(mutex);
        while (next < jobs.size() && done[next]) ++next;
        if (next >= jobs.size() || !result.failure.empty()) return;
        i = next++;
      }
      try {
        const Job& job = jobs[i];
        const PointData d = point_data(layout, job.k, job.synthetic);
        SweepRow row = train_point(plan, d, job.k, job.synthetic, job.seed, options);
        std::lock_guard lock(mutex);
        for (const auto& r : row.reports) eval::write_report(r, plan.output_dir / "reports");
        done[i] = std::move(row);
        persist();
        if (options.on_row) options.on_row(*done[i]);
      } catch (const Cancelled& e) {
        std::lock_guard lock(mutex);
        if (result.failure.empty()) result.failure = e.what();
      } catch (const Error& e) {
        std::lock_guard lock(mutex);
        if (result.failure.empty()) {
          result.failure = model_tag(jobs[i].k, jobs[i].synthetic, jobs[i].seed) + ": " + e.what();
        }
      }
    }
  };
  try {
    check_cancel(options);
    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, jobs.size());
    if (workers == 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }
  } catch (const Cancelled& e) {
    result.failure = e.what();
  }
  persist();
  result.rows = completed_rows();
  result.complete = result.rows.size() == jobs.size();
  if (result.complete) emit_outputs(result.rows, tags, plan.output_dir);
  return result;
}

BestK select_best_k(const std::vector<SweepRow>& rows, const std::string& heldout_tag) {
  const auto means = mean_by_k(rows, heldout_tag);
  if (means.empty()) throw DataError("select_best_k: no rows with a k value");
  BestK best{means.begin()->first, means.begin()->second};
  for (const auto& [k, acc] : means) {
    if (acc > best.accuracy) best = {k, acc};
  }
  return best;
}

std::optional<std::size_t> detect_forgetting_threshold(const std::vector<SweepRow>& rows,
                                                       const std::string& heldout_tag, double margin) {
  const auto means = mean_by_k(rows, heldout_tag);
  if (means.empty()) return std::nullopt;
  const BestK best = select_best_k(rows, heldout_tag);
  // A drop of exactly `margin` does not count; the tolerance absorbs rounding.
  constexpr double kTolerance = 1e-9;
  for (auto it = means.upper_bound(best.k); it != means.end(); ++it) {
    if (best.accuracy - it->second > margin + kTolerance) return it->first;
  }
  return std::nullopt;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows, const std::vector<std::string>& heldout_tags) {
  std::string out = "k,composition,train_acc,test_acc";
  for (const auto& tag : heldout_tags) out += "," + tag + "_acc";
  out += ",model_tag,seed\n";
  for (const auto& r : rows) {
    out += (r.k ? std::to_string(*r.k) : std::string()) + "," + r.composition + "," + format_accuracy(r.train_acc) +
           "," + format_accuracy(r.test_acc);
    for (const auto& tag : heldout_tags) {
      const auto acc = r.heldout(tag);
      out += "," + (acc ? format_accuracy(*acc) : std::string());
    }
    out += "," + r.model_tag + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::vector<std::filesystem::path> emit_outputs(const std::vector<SweepRow>& rows,
                                                const std::vector<std::string>& heldout_tags,
                                                const std::filesystem::path& dir) {
  if (rows.empty()) throw DataError("emit_outputs: no rows");
  ensure_directory(dir);
  std::vector<std::filesystem::path> paths{dir / "sweep.csv", dir / "sweep.svg"};
  write_file_atomic(paths[0], format_sweep_csv(rows, heldout_tags));
  write_file_atomic(paths[1], plot_svg(rows, heldout_tags));
  for (const auto& r : rows) {
    for (const auto& rep : r.reports) {
      const auto written = eval::write_report(rep, dir / "reports");
      paths.insert(paths.end(), written.begin(), written.end());
    }
  }
  return paths;
}

}  // namespace fergan::sweep
