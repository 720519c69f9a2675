#include "fergan/emotion.hpp"

#include <algorithm>
#include <cctype>

#include "fergan/common/error.hpp"

namespace fergan {

Emotion emotion_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kNumEmotions)) {
    throw DataError("emotion index out of range 0..5: " + std::to_string(index));
  }
  return static_cast<Emotion>(index);
}

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::kAnger: return "anger";
    case Emotion::kDisgust: return "disgust";
    case Emotion::kFear: return "fear";
    case Emotion::kHappiness: return "happiness";
    case Emotion::kSadness: return "sadness";
    case Emotion::kSurprised: return "surprised";
  }
  return "unknown";
}

std::optional<Emotion> parse_emotion(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "anger" || s == "angry") return Emotion::kAnger;
  if (s == "disgust" || s == "disgusted") return Emotion::kDisgust;
  if (s == "fear" || s == "fearful" || s == "afraid") return Emotion::kFear;
  if (s == "happiness" || s == "happy" || s == "joy") return Emotion::kHappiness;
  if (s == "sadness" || s == "sad") return Emotion::kSadness;
  if (s == "surprised" || s == "surprise") return Emotion::kSurprised;
  return std::nullopt;
}

DomainCode DomainCode::of(Emotion e) { return DomainCode(e); }

DomainCode DomainCode::from_values(std::span<const float> values) {
  if (values.size() != kNumEmotions) {
    throw ShapeError("domain code must have 6 entries, got " + std::to_string(values.size()));
  }
  int hot = -1;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 1.0f) {
      if (hot >= 0) throw ShapeError("domain code has more than one hot entry");
      hot = static_cast<int>(i);
    } else if (values[i] != 0.0f) {
      throw ShapeError("domain code entries must be 0 or 1");
    }
  }
  if (hot < 0) throw ShapeError("domain code has no hot entry");
  return DomainCode(static_cast<Emotion>(hot));
}

std::array<float, kNumEmotions> DomainCode::one_hot() const {
  std::array<float, kNumEmotions> v{};
  v[static_cast<std::size_t>(emotion_)] = 1.0f;
  return v;
}

}  // namespace fergan
