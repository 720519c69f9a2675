#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace fergan {

/// Seeded generator with distributions implemented in-library so that every
/// sampled value is identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Derives an independent stream, e.g. one per identity or per epoch.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; caches the second variate.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// splitmix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t value);

/// FNV-1a over raw bytes; used for seeds derived from content, not as a digest.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace fergan
