#pragma once

#include <cstdint>
#include <optional>

#include <nlohmann/json.hpp>

#include "fergan/data/dataset.hpp"

namespace fergan::data {

/// Size of one split: an identity count, a fraction of identities (rounded
/// half-up), or neither, meaning "whatever is left". Counts win over fractions.
struct SplitPart {
  std::optional<std::size_t> count;
  std::optional<double> fraction;
};

struct SplitSpec {
  SplitPart train;
  SplitPart val;
  SplitPart test;
  std::uint64_t seed = 0;

  static SplitSpec counts(std::size_t train, std::size_t val, std::size_t test, std::uint64_t seed = 0);

  /// {"train": 109, "val": 0.1, "test": null, "seed": 0}: an integer is a
  /// count, a float a fraction, null (or a missing key) the remainder.
  nlohmann::json to_json() const;
  static SplitSpec from_json(const nlohmann::json& doc);
};

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
};

/// Resolves a spec against an identity count. Throws ConfigError when the
/// parts cannot partition exactly `identities` identities.
SplitCounts resolve_split(const SplitSpec& spec, std::size_t identities);

struct DatasetSplit {
  FaceDataset train;
  FaceDataset val;
  FaceDataset test;
};

/// Shuffles identities with the spec's seed and deals them out train, val,
/// test. Every record of an identity lands in that identity's split.
DatasetSplit split_by_identity(const FaceDataset& dataset, const SplitSpec& spec);

}  // namespace fergan::data
