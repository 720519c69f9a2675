#include "fergan/data/mixing.hpp"

#include "fergan/common/random.hpp"

namespace fergan::data {

FaceDataset mix(const FaceDataset& real, std::size_t k, const FaceDataset& pool) {
  if (k == 0) return real;
  const std::size_t needed = k * real.identity_count();
  if (pool.identity_count() < needed) {
    throw DataError("generated pool exhausted: " + std::to_string(k) + " units of " +
                    std::to_string(real.identity_count()) + " identities need " + std::to_string(needed) +
                    ", pool has " + std::to_string(pool.identity_count()));
  }
  FaceDataset out = real;
  out.append(take_identities(pool, 0, needed));
  return out;
}

FaceDataset shuffle_identities(const FaceDataset& dataset, std::uint64_t seed) {
  std::vector<std::string> ids = dataset.identities();
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(ids));
  return dataset.subset(ids);
}

FaceDataset take_identities(const FaceDataset& dataset, std::size_t first, std::size_t count) {
  const auto& ids = dataset.identities();
  if (first + count > ids.size()) {
    throw DataError("requested identities [" + std::to_string(first) + ", " + std::to_string(first + count) +
                    ") but dataset has " + std::to_string(ids.size()));
  }
  return dataset.subset(std::span<const std::string>(ids).subspan(first, count));
}

}  // namespace fergan::data
