#include "fergan/gan/latent.hpp"

#include <cmath>
#include <cstring>

#include "fergan/common/random.hpp"

namespace fergan::gan {

LatentVector::LatentVector(std::vector<float> values) : values_(std::move(values)) {
  if (values_.empty()) throw ConfigError("latent vector must not be empty");
  for (const float v : values_) {
    if (!std::isfinite(v)) throw ConfigError("latent vector has a non-finite entry");
  }
}

LatentVector LatentVector::sample(std::size_t dim, std::uint64_t seed, std::uint64_t index) {
  Rng rng = Rng::derive(seed, index);
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return LatentVector(std::move(v));
}

std::uint64_t LatentVector::fingerprint() const {
  std::string bytes(values_.size() * sizeof(float), '\0');
  std::memcpy(bytes.data(), values_.data(), bytes.size());
  return fnv1a(bytes);
}

}  // namespace fergan::gan
