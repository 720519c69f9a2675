#include "fergan/image.hpp"

#include <algorithm>
#include <cmath>

namespace fergan {

bool ImageTensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

bool ImageTensor::within(float lo, float hi) const {
  return std::all_of(data_.begin(), data_.end(), [=](float v) { return v >= lo && v <= hi; });
}

}  // namespace fergan
