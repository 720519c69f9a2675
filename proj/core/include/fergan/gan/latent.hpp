#pragma once

#include <cstdint>
#include <vector>

#include "fergan/common/error.hpp"

namespace fergan::gan {

/// Fixed-length finite vector that seeds one identity.
class LatentVector {
 public:
  explicit LatentVector(std::vector<float> values);

  /// Standard-normal draw from a derived stream of (seed, index).
  static LatentVector sample(std::size_t dim, std::uint64_t seed, std::uint64_t index);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<float>& values() const noexcept { return values_; }

  /// Stable 64-bit digest of the exact float bits.
  std::uint64_t fingerprint() const;

 private:
  std::vector<float> values_;
};

}  // namespace fergan::gan
