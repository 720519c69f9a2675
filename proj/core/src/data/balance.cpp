#include "fergan/data/balance.hpp"

namespace fergan::data {

BalanceReport validate_balance(const FaceDataset& dataset) {
  BalanceReport report;
  for (const auto& r : dataset.records()) ++report.per_class_counts[static_cast<std::size_t>(index_of(r.emotion))];
  for (const auto& id : dataset.identities()) {
    std::array<std::size_t, kNumEmotions> seen{};
    for (const std::size_t i : dataset.indices_of(id)) ++seen[static_cast<std::size_t>(index_of(dataset[i].emotion))];
    for (const std::size_t c : seen) {
      if (c != 1) {
        report.offending_identities.push_back(id);
        break;
      }
    }
  }
  report.balanced = report.offending_identities.empty();
  return report;
}

}  // namespace fergan::data
