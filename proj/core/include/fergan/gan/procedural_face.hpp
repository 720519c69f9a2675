#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "fergan/common/random.hpp"
#include "fergan/emotion.hpp"
#include "fergan/image.hpp"

namespace fergan::gan {

/// Rendering population. kStudio is the default corpus look; kField is a
/// shifted population (lighter backgrounds, smaller faces, subtler
/// expressions, more sensor noise) used as a stand-in for a second database.
enum class FaceStyle { kStudio, kField };

FaceStyle parse_face_style(std::string_view text);
std::string_view to_string(FaceStyle style);

/// Per-subject geometry and shading, in normalised coordinates where the image
/// spans [-1, 1] on both axes with y pointing down.
struct IdentityTraits {
  double background, skin, hair, feature_tone;
  double face_cx, face_cy, face_rx, face_ry, hairline;
  double eye_dx, eye_y, eye_r;
  double brow_gap, brow_len, brow_thickness;
  double nose_len;
  double mouth_y, mouth_half_width, lip_thickness;
  double noise;
  double expression_gain;
  std::uint64_t texture_seed;
};

/// Continuous expression controls; each Ekman class maps to a prototype.
struct ExpressionParams {
  double mouth_curve = 0;    // > 0 smile, < 0 frown
  double mouth_open = 0;     // vertical opening radius
  double mouth_width = 1;    // relative to the identity's mouth width
  double mouth_tilt = 0;     // asymmetric corner lift
  double brow_inner = 0;     // > 0 lowers the inner brow ends
  double brow_raise = 0;     // lifts the whole brow
  double eye_open = 1;       // vertical eye aperture factor
  double nose_wrinkle = 0;   // 0..1
};

ExpressionParams expression_prototype(Emotion emotion);

IdentityTraits random_traits(Rng& rng, FaceStyle style);

/// Prototype with small per-sample jitter, scaled by the identity's gain.
ExpressionParams jittered_expression(Emotion emotion, const IdentityTraits& traits, Rng& rng);

/// Anti-aliased single-channel render at size x size.
ImageTensor render_face(const IdentityTraits& traits, const ExpressionParams& expression, std::size_t size);

}  // namespace fergan::gan
