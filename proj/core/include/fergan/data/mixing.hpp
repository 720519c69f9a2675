#pragma once

#include <cstdint>

#include "fergan/data/dataset.hpp"

namespace fergan::data {

/// Real set extended by k units of generated identities, each unit the size of
/// the real identity set: identities are taken from `pool` in pool order,
/// without replacement. k == 0 returns `real` unchanged. Throws DataError if
/// the pool holds fewer than k * |real identities| identities.
FaceDataset mix(const FaceDataset& real, std::size_t k, const FaceDataset& pool);

/// Same pool with identities in a seeded random order.
FaceDataset shuffle_identities(const FaceDataset& dataset, std::uint64_t seed);

/// Identities [first, first + count) of the dataset's identity order.
FaceDataset take_identities(const FaceDataset& dataset, std::size_t first, std::size_t count);

}  // namespace fergan::data
