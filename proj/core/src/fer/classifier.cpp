#include "fergan/fer/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "fergan/common/hash.hpp"
#include "fergan/common/json_fields.hpp"
#include "fergan/common/random.hpp"
#include "fergan/nn/archive.hpp"
#include "fergan/nn/loss.hpp"
#include "fergan/nn/optim.hpp"

namespace fergan::fer {

using nn::Tensor;

namespace {

constexpr const char* kCheckpointKind = "fergan.classifier";
constexpr const char* kNetworkName = "classifier";

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Pixels of the records as one [N, C, H, W] block; checks every shape.
std::vector<float> pack_images(const data::FaceDataset& ds, const ClassifierSpec& spec) {
  const std::size_t s = spec.input_size, c = spec.input_channels, per = s * s * c;
  std::vector<float> out(ds.size() * per);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const ImageTensor& img = ds[i].image;
    if (img.height() != s || img.width() != s || img.channels() != c) {
      throw ShapeError("classifier expects " + std::to_string(s) + "x" + std::to_string(s) + "x" + std::to_string(c) +
                       " images, record " + std::to_string(i) + " is " + std::to_string(img.height()) + "x" +
                       std::to_string(img.width()) + "x" + std::to_string(img.channels()));
    }
    // HWC -> CHW
    float* dst = out.data() + i * per;
    for (std::size_t y = 0; y < s; ++y) {
      for (std::size_t x = 0; x < s; ++x) {
        for (std::size_t ch = 0; ch < c; ++ch) dst[(ch * s + y) * s + x] = img.at(y, x, ch);
      }
    }
  }
  return out;
}

Tensor<float> gather(const std::vector<float>& pixels, std::span<const std::size_t> idx, const ClassifierSpec& spec) {
  const std::size_t s = spec.input_size, c = spec.input_channels, per = s * s * c;
  Tensor<float> x({idx.size(), c, s, s});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(idx[b] * per), per, x.data() + b * per);
  }
  return x;
}

struct Scores {
  double loss = 0.0;
  double accuracy = 0.0;
};

Scores score(const nn::Sequential<float>& net, const std::vector<float>& pixels, std::span<const int> labels,
             const ClassifierSpec& spec, std::size_t batch) {
  const std::size_t n = labels.size();
  double loss = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < n; first += batch) {
    const std::size_t m = std::min(batch, n - first);
    idx.resize(m);
    for (std::size_t b = 0; b < m; ++b) idx[b] = first + b;
    const Tensor<float> logits = net.infer(gather(pixels, idx, spec));
    const auto ce = nn::softmax_cross_entropy(logits, labels.subspan(first, m));
    loss += static_cast<double>(ce.value) * static_cast<double>(m);
    for (std::size_t b = 0; b < m; ++b) {
      const float* row = logits.data() + b * spec.classes;
      const auto arg = static_cast<int>(std::max_element(row, row + spec.classes) - row);
      correct += arg == labels[first + b];
    }
  }
  return {loss / static_cast<double>(n), static_cast<double>(correct) / static_cast<double>(n)};
}

}  // namespace

ClassifierSpec ClassifierSpec::shrunken() {
  ClassifierSpec s;
  s.input_size = 8;
  s.conv_widths = {2, 4, 8, 8};
  s.dense_units = 16;
  return s;
}

void ClassifierSpec::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("classifier spec: " + msg); };
  if (input_size == 0 || input_size % 8 != 0) fail("input_size must be a positive multiple of 8");
  if (input_channels == 0) fail("input_channels must be positive");
  for (std::size_t w : conv_widths) {
    if (w == 0) fail("conv widths must be positive");
  }
  if (dense_units == 0) fail("dense_units must be positive");
  if (classes != kNumEmotions) fail("classes must be 6");
  if (kernel == 0 || kernel % 2 == 0) fail("kernel must be odd for same padding");
  for (double r : dropout) {
    if (!(r >= 0.0 && r < 1.0)) fail("dropout rates must lie in [0, 1)");
  }
}

nlohmann::json ClassifierSpec::to_json() const {
  return {{"input_size", input_size}, {"input_channels", input_channels}, {"conv_widths", conv_widths},
          {"dense_units", dense_units}, {"classes", classes},               {"kernel", kernel},
          {"dropout", dropout}};
}

ClassifierSpec ClassifierSpec::from_json(const nlohmann::json& doc) {
  ClassifierSpec s;
  FieldReader(doc, "classifier spec")
      .read("input_size", s.input_size)
      .read("input_channels", s.input_channels)
      .read("conv_widths", s.conv_widths)
      .read("dense_units", s.dense_units)
      .read("classes", s.classes)
      .read("kernel", s.kernel)
      .read("dropout", s.dropout)
      .finish();
  s.validate();
  return s;
}

std::string ClassifierSpec::digest() const { return sha256_hex(to_json().dump()); }

std::vector<LayerRow> layer_table(const ClassifierSpec& spec) {
  spec.validate();
  std::vector<LayerRow> rows;
  nn::Shape cur{spec.input_size, spec.input_size, spec.input_channels};
  auto conv = [&](std::size_t filters) {
    LayerRow r{rows.size() + 1, "Conv2D", cur, {cur[0], cur[1], filters}, filters, 0, 0.0, "Relu"};
    cur = r.output;
    rows.push_back(r);
  };
  auto pool = [&] {
    LayerRow r{rows.size() + 1, "Max Pooling", cur, {cur[0] / 2, cur[1] / 2, cur[2]}, 0, 2, 0.0, ""};
    cur = r.output;
    rows.push_back(r);
  };
  auto drop = [&](double rate) { rows.push_back({rows.size() + 1, "Drop out", cur, cur, 0, 0, rate, ""}); };
  conv(spec.conv_widths[0]);
  conv(spec.conv_widths[1]);
  pool();
  drop(spec.dropout[0]);
  conv(spec.conv_widths[2]);
  pool();
  conv(spec.conv_widths[3]);
  pool();
  drop(spec.dropout[1]);
  rows.push_back({rows.size() + 1, "Flatten", cur, {nn::numel(cur)}, 0, 0, 0.0, ""});
  cur = rows.back().output;
  rows.push_back({rows.size() + 1, "Dense", cur, {spec.dense_units}, spec.dense_units, 0, 0.0, "Relu"});
  cur = rows.back().output;
  drop(spec.dropout[2]);
  rows.push_back({rows.size() + 1, "Dense", cur, {spec.classes}, spec.classes, 0, 0.0, "Softmax"});
  return rows;
}

template <typename T>
nn::Sequential<T> build_network(const ClassifierSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t k = spec.kernel, pad = k / 2;
  const auto& w = spec.conv_widths;
  nn::Sequential<T> net;
  net.template emplace<nn::Conv2d>(spec.input_channels, w[0], k, 1, pad);
  net.template emplace<nn::ReLU>();
  net.template emplace<nn::Conv2d>(w[0], w[1], k, 1, pad);
  net.template emplace<nn::ReLU>();
  net.template emplace<nn::MaxPool2d>(2);
  net.template emplace<nn::Dropout>(spec.dropout[0]);
  net.template emplace<nn::Conv2d>(w[1], w[2], k, 1, pad);
  net.template emplace<nn::ReLU>();
  net.template emplace<nn::MaxPool2d>(2);
  net.template emplace<nn::Conv2d>(w[2], w[3], k, 1, pad);
  net.template emplace<nn::ReLU>();
  net.template emplace<nn::MaxPool2d>(2);
  net.template emplace<nn::Dropout>(spec.dropout[1]);
  net.template emplace<nn::Flatten>();
  const std::size_t side = spec.input_size / 8;
  net.template emplace<nn::Dense>(w[3] * side * side, spec.dense_units);
  net.template emplace<nn::ReLU>();
  net.template emplace<nn::Dropout>(spec.dropout[2]);
  net.template emplace<nn::Dense>(spec.dense_units, spec.classes);
  Rng rng = Rng::derive(seed, 0x636c6173);
  net.reset_parameters(rng);
  return net;
}

template nn::Sequential<float> build_network<float>(const ClassifierSpec&, std::uint64_t);
template nn::Sequential<double> build_network<double>(const ClassifierSpec&, std::uint64_t);

Classifier build_classifier(const ClassifierSpec& spec, std::uint64_t seed) {
  return {spec, build_network<float>(spec, seed), spec.digest()};
}

std::vector<std::array<double, kNumEmotions>> predict(const Classifier& model, std::span<const ImageTensor> images) {
  std::vector<std::array<double, kNumEmotions>> out;
  if (images.empty()) return out;
  const ClassifierSpec& spec = model.spec;
  const std::size_t s = spec.input_size, c = spec.input_channels, per = s * s * c;
  constexpr std::size_t kBatch = 64;
  for (std::size_t first = 0; first < images.size(); first += kBatch) {
    const std::size_t m = std::min(kBatch, images.size() - first);
    Tensor<float> x({m, c, s, s});
    for (std::size_t b = 0; b < m; ++b) {
      const ImageTensor& img = images[first + b];
      if (img.height() != s || img.width() != s || img.channels() != c) {
        throw ShapeError("classifier expects " + std::to_string(s) + "x" + std::to_string(s) + "x" +
                         std::to_string(c) + " images");
      }
      float* dst = x.data() + b * per;
      for (std::size_t y = 0; y < s; ++y) {
        for (std::size_t xx = 0; xx < s; ++xx) {
          for (std::size_t ch = 0; ch < c; ++ch) dst[(ch * s + y) * s + xx] = img.at(y, xx, ch);
        }
      }
    }
    const Tensor<float> probs = nn::softmax(model.network.infer(x));
    for (std::size_t b = 0; b < m; ++b) {
      std::array<double, kNumEmotions> row{};
      for (std::size_t j = 0; j < kNumEmotions; ++j) row[j] = probs[b * kNumEmotions + j];
      out.push_back(row);
    }
  }
  return out;
}

std::vector<std::array<double, kNumEmotions>> predict(const Classifier& model, const data::FaceDataset& dataset) {
  std::vector<ImageTensor> images;
  images.reserve(dataset.size());
  for (const auto& r : dataset.records()) images.push_back(r.image);
  return predict(model, images);
}

void save_classifier(const std::filesystem::path& path, const Classifier& model, const nlohmann::json& extra) {
  nn::Archive archive;
  archive.metadata["kind"] = kCheckpointKind;
  archive.metadata["spec"] = model.spec.to_json();
  archive.metadata["spec_digest"] = model.spec_digest;
  if (!extra.empty()) archive.metadata["extra"] = extra;
  nn::store_network(archive, kNetworkName, model.network);
  nn::write_archive(path, archive);
}

Classifier load_classifier(const std::filesystem::path& path) {
  const nn::Archive archive = nn::read_archive(path);
  if (archive.metadata.value("kind", std::string()) != kCheckpointKind) {
    throw DataError(path.string() + ": not a classifier checkpoint");
  }
  Classifier model;
  try {
    model.spec = ClassifierSpec::from_json(archive.metadata.at("spec"));
    model.spec_digest = archive.metadata.at("spec_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed classifier metadata: " + e.what());
  }
  if (model.spec_digest != model.spec.digest()) {
    throw DataError(path.string() + ": spec digest does not match the embedded spec");
  }
  model.network = nn::load_network(archive, kNetworkName);
  if (model.network.describe() != build_network<float>(model.spec, 0).describe()) {
    throw ShapeError(path.string() + ": stored network does not match its spec");
  }
  return model;
}

void FitConfig::validate() const {
  if (batch_size == 0) throw ConfigError("fit config: batch_size must be positive");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw ConfigError("fit config: learning_rate must be positive");
  }
  if (patience && *patience == 0) throw ConfigError("fit config: patience must be positive when set");
}

nlohmann::json FitConfig::to_json() const {
  nlohmann::json j{{"epochs", epochs},
                   {"batch_size", batch_size},
                   {"learning_rate", learning_rate},
                   {"optimizer", optimizer == OptimizerKind::kAdam ? "adam" : "sgd"},
                   {"seed", seed}};
  j["patience"] = patience ? nlohmann::json(*patience) : nlohmann::json(nullptr);
  return j;
}

FitConfig FitConfig::from_json(const nlohmann::json& doc) {
  FitConfig c;
  FieldReader fields(doc, "fit config");
  std::string optimizer = "adam";
  fields.read("epochs", c.epochs)
      .read("batch_size", c.batch_size)
      .read("learning_rate", c.learning_rate)
      .read("seed", c.seed)
      .read("optimizer", optimizer)
      .read("patience", c.patience)
      .finish();
  if (optimizer == "adam") {
    c.optimizer = OptimizerKind::kAdam;
  } else if (optimizer == "sgd") {
    c.optimizer = OptimizerKind::kSgd;
  } else {
    throw ConfigError("fit config: unknown optimizer '" + optimizer + "' (expected adam or sgd)");
  }
  c.validate();
  return c;
}

std::string TrainingLog::to_csv() const {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + ',' + format_number(e.train_loss) + ',' + format_number(e.train_acc) + ',' +
           (e.val_loss ? format_number(*e.val_loss) : std::string()) + ',' +
           (e.val_acc ? format_number(*e.val_acc) : std::string()) + '\n';
  }
  return out;
}

FitResult train_classifier(const data::FaceDataset& train, const data::FaceDataset& val, const FitConfig& config,
                           const ClassifierSpec& spec, const FitOptions& options) {
  config.validate();
  spec.validate();
  if (train.empty()) throw DataError("train_classifier: empty training set");
  std::set<Emotion> classes;
  for (const auto& r : train.records()) classes.insert(r.emotion);
  if (classes.size() < 2) throw DataError("train_classifier: training set needs at least 2 emotion classes");

  const std::vector<float> train_px = pack_images(train, spec);
  const std::vector<float> val_px = pack_images(val, spec);
  std::vector<int> train_y, val_y;
  for (const auto& r : train.records()) train_y.push_back(index_of(r.emotion));
  for (const auto& r : val.records()) val_y.push_back(index_of(r.emotion));

  FitResult result{build_classifier(spec, config.seed), {}};
  nn::Sequential<float>& net = result.model.network;
  nn::Sequential<float> best_net = net;
  std::optional<nn::Adam<float>> adam;
  std::optional<nn::Sgd<float>> sgd;
  if (config.optimizer == OptimizerKind::kAdam) {
    adam.emplace(net.params(), nn::AdamOptions{config.learning_rate, 0.9, 0.999, 1e-8});
  } else {
    sgd.emplace(net.params(), config.learning_rate);
  }

  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng = Rng::derive(config.seed, 2 * epoch);
    Rng dropout_rng = Rng::derive(config.seed, 2 * epoch + 1);
    shuffle_rng.shuffle(std::span(order));
    const nn::ForwardContext ctx{nn::Mode::kTraining, &dropout_rng};

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<int> labels;
    for (std::size_t first = 0; first < n; first += config.batch_size) {
      const std::size_t m = std::min(config.batch_size, n - first);
      const std::span<const std::size_t> idx(order.data() + first, m);
      labels.resize(m);
      for (std::size_t b = 0; b < m; ++b) labels[b] = train_y[idx[b]];
      nn::Trace<float> trace;
      const Tensor<float> logits = net.forward(gather(train_px, idx, spec), &trace, ctx);
      const auto ce = nn::softmax_cross_entropy(logits, labels);
      if (!std::isfinite(ce.value)) {
        throw TrainingError("train_classifier: non-finite loss in epoch " + std::to_string(epoch) + " at sample " +
                            std::to_string(first));
      }
      net.zero_grad();
      net.backward(ce.grad, trace);
      if (adam) adam->step();
      if (sgd) sgd->step();
      loss_sum += static_cast<double>(ce.value) * static_cast<double>(m);
      for (std::size_t b = 0; b < m; ++b) {
        const float* row = logits.data() + b * spec.classes;
        correct += static_cast<int>(std::max_element(row, row + spec.classes) - row) == labels[b];
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    if (!val.empty()) {
      const Scores s = score(net, val_px, val_y, spec, 64);
      rec.val_loss = s.loss;
      rec.val_acc = s.accuracy;
    }
    result.log.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    const bool improved = !result.log.best || !rec.val_acc ||
                          *rec.val_acc > *result.log.epochs[*result.log.best].val_acc;
    if (improved) {
      result.log.best = result.log.epochs.size() - 1;
      best_net = net;
      since_best = 0;
    } else if (config.patience && ++since_best >= *config.patience) {
      break;
    }
  }
  net = std::move(best_net);
  return result;
}

}  // namespace fergan::fer
