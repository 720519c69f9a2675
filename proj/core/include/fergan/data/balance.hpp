#pragma once

#include <array>
#include <string>
#include <vector>

#include "fergan/data/dataset.hpp"

namespace fergan::data {

struct BalanceReport {
  bool balanced = true;
  std::array<std::size_t, kNumEmotions> per_class_counts{};
  std::vector<std::string> offending_identities;
};

/// Balanced iff every identity has exactly one record per emotion class.
BalanceReport validate_balance(const FaceDataset& dataset);

}  // namespace fergan::data
