#include "fergan/data/split.hpp"

#include <cmath>
#include <set>

#include "fergan/common/json_fields.hpp"
#include "fergan/common/random.hpp"

namespace fergan::data {

SplitSpec SplitSpec::counts(std::size_t train, std::size_t val, std::size_t test, std::uint64_t seed) {
  SplitSpec s;
  s.train.count = train;
  s.val.count = val;
  s.test.count = test;
  s.seed = seed;
  return s;
}

namespace {

nlohmann::json part_json(const SplitPart& part) {
  if (part.count) return *part.count;
  if (part.fraction) return *part.fraction;
  return nullptr;
}

SplitPart parse_part(const nlohmann::json* value, const char* name) {
  SplitPart part;
  if (value == nullptr || value->is_null()) return part;
  if (value->is_number_unsigned()) {
    part.count = value->get<std::size_t>();
  } else if (value->is_number_float()) {
    part.fraction = value->get<double>();
  } else {
    throw ConfigError(std::string("split spec: '") + name + "' must be a count, a fraction or null");
  }
  return part;
}

}  // namespace

nlohmann::json SplitSpec::to_json() const {
  return {{"train", part_json(train)}, {"val", part_json(val)}, {"test", part_json(test)}, {"seed", seed}};
}

SplitSpec SplitSpec::from_json(const nlohmann::json& doc) {
  SplitSpec s;
  FieldReader fields(doc, "split spec");
  s.train = parse_part(fields.child("train"), "train");
  s.val = parse_part(fields.child("val"), "val");
  s.test = parse_part(fields.child("test"), "test");
  fields.read("seed", s.seed).finish();
  return s;
}

SplitCounts resolve_split(const SplitSpec& spec, std::size_t identities) {
  struct Resolved {
    std::optional<std::size_t> n;
    bool from_fraction = false;
  };
  auto resolve = [&](const SplitPart& part, const char* name) -> Resolved {
    if (part.count) return {part.count, false};
    if (part.fraction) {
      const double f = *part.fraction;
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError(std::string("split fraction for ") + name + " must lie in [0, 1]");
      return {static_cast<std::size_t>(std::floor(f * static_cast<double>(identities) + 0.5)), true};
    }
    return {std::nullopt, false};
  };
  Resolved parts[3] = {resolve(spec.train, "train"), resolve(spec.val, "val"), resolve(spec.test, "test")};

  int open = -1;
  std::size_t fixed = 0;
  for (int i = 0; i < 3; ++i) {
    if (!parts[i].n) {
      if (open >= 0) throw ConfigError("split spec leaves more than one part unsized");
      open = i;
    } else {
      fixed += *parts[i].n;
    }
  }
  // Rounded fractions may miss the total by one; the train fraction absorbs it.
  if (open < 0 && fixed != identities && parts[0].from_fraction) {
    const std::size_t others = *parts[1].n + *parts[2].n;
    if (others <= identities) {
      parts[0].n = identities - others;
      fixed = identities;
    }
  }
  if (fixed > identities) {
    throw ConfigError("split spec needs " + std::to_string(fixed) + " identities but only " +
                      std::to_string(identities) + " are available");
  }
  if (open >= 0) {
    parts[open].n = identities - fixed;
  } else if (fixed != identities) {
    throw ConfigError("split spec assigns " + std::to_string(fixed) + " of " + std::to_string(identities) +
                      " identities; sizes must cover every identity");
  }
  return {*parts[0].n, *parts[1].n, *parts[2].n};
}

DatasetSplit split_by_identity(const FaceDataset& dataset, const SplitSpec& spec) {
  const SplitCounts counts = resolve_split(spec, dataset.identity_count());
  std::vector<std::string> ids = dataset.identities();
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::string>(ids));

  const auto begin = ids.begin();
  const auto train_end = begin + static_cast<std::ptrdiff_t>(counts.train);
  const auto val_end = train_end + static_cast<std::ptrdiff_t>(counts.val);
  const std::set<std::string> train_ids(begin, train_end);
  const std::set<std::string> val_ids(train_end, val_end);

  // Keep the source dataset's record order inside each split.
  DatasetSplit out;
  for (const auto& r : dataset.records()) {
    if (train_ids.contains(r.identity_id)) {
      out.train.add(r);
    } else if (val_ids.contains(r.identity_id)) {
      out.val.add(r);
    } else {
      out.test.add(r);
    }
  }
  return out;
}

}  // namespace fergan::data
