#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace fergan {

/// The six Ekman classes. The integer encoding is stable and is the class
/// index used by every network head, confusion matrix, and report.
enum class Emotion : int {
  kAnger = 0,
  kDisgust = 1,
  kFear = 2,
  kHappiness = 3,
  kSadness = 4,
  kSurprised = 5,
};

inline constexpr std::size_t kNumEmotions = 6;

inline constexpr std::array<Emotion, kNumEmotions> kAllEmotions{
    Emotion::kAnger,     Emotion::kDisgust, Emotion::kFear,
    Emotion::kHappiness, Emotion::kSadness, Emotion::kSurprised,
};

constexpr int index_of(Emotion e) { return static_cast<int>(e); }

/// Throws DataError for indices outside 0..5.
Emotion emotion_from_index(int index);

/// Canonical lowercase name: anger, disgust, fear, happiness, sadness, surprised.
std::string_view to_string(Emotion e);

/// Accepts the canonical names and the usual corpus spellings (angry, happy,
/// sad, surprise, ...). "neutral" and anything else is rejected.
std::optional<Emotion> parse_emotion(std::string_view text);

/// One-hot conditioning vector for the expression translator.
class DomainCode {
 public:
  static DomainCode of(Emotion e);
  /// Validates that exactly one entry is 1 and the rest are 0.
  static DomainCode from_values(std::span<const float> values);

  Emotion emotion() const noexcept { return emotion_; }
  std::array<float, kNumEmotions> one_hot() const;

 private:
  explicit DomainCode(Emotion e) : emotion_(e) {}
  Emotion emotion_;
};

}  // namespace fergan
