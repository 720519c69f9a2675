#include "fergan/gan/procedural_face.hpp"

#include <algorithm>
#include <cmath>

#include "fergan/common/error.hpp"

namespace fergan::gan {
namespace {

struct Vec2 {
  double x, y;
};

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double abx = b.x - a.x, aby = b.y - a.y;
  const double t = std::clamp(((p.x - a.x) * abx + (p.y - a.y) * aby) / (abx * abx + aby * aby), 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * abx), p.y - (a.y + t * aby));
}

// Approximate signed distance to an axis-aligned ellipse.
double ellipse_sdf(Vec2 p, Vec2 c, double rx, double ry) {
  const double dx = (p.x - c.x) / rx, dy = (p.y - c.y) / ry;
  const double k = std::hypot(dx, dy);
  return (k - 1.0) * std::min(rx, ry);
}

// Fraction of a pixel covered by the region sdf < 0.
double coverage(double sdf, double pixel) { return std::clamp(0.5 - sdf / pixel, 0.0, 1.0); }

void blend(double& dst, double value, double alpha) { dst = dst * (1.0 - alpha) + value * alpha; }

}  // namespace

FaceStyle parse_face_style(std::string_view text) {
  if (text == "studio") return FaceStyle::kStudio;
  if (text == "field") return FaceStyle::kField;
  throw ConfigError("unknown face style '" + std::string(text) + "' (expected studio or field)");
}

std::string_view to_string(FaceStyle style) { return style == FaceStyle::kStudio ? "studio" : "field"; }

ExpressionParams expression_prototype(Emotion emotion) {
  ExpressionParams e;
  switch (emotion) {
    case Emotion::kAnger:
      e.mouth_curve = -0.03;
      e.mouth_width = 0.75;
      e.brow_inner = 0.10;
      e.eye_open = 0.7;
      break;
    case Emotion::kDisgust:
      e.mouth_curve = -0.07;
      e.mouth_width = 0.9;
      e.mouth_tilt = 0.08;
      e.brow_inner = 0.04;
      e.eye_open = 0.5;
      e.nose_wrinkle = 1.0;
      break;
    case Emotion::kFear:
      e.mouth_curve = -0.02;
      e.mouth_open = 0.07;
      e.mouth_width = 1.15;
      e.brow_inner = -0.08;
      e.brow_raise = 0.06;
      e.eye_open = 1.5;
      break;
    case Emotion::kHappiness:
      e.mouth_curve = 0.13;
      e.mouth_open = 0.02;
      e.mouth_width = 1.3;
      e.eye_open = 0.6;
      break;
    case Emotion::kSadness:
      e.mouth_curve = -0.12;
      e.mouth_width = 0.9;
      e.brow_inner = -0.11;
      e.eye_open = 0.8;
      break;
    case Emotion::kSurprised:
      e.mouth_open = 0.2;
      e.mouth_width = 0.6;
      e.brow_raise = 0.13;
      e.eye_open = 1.7;
      break;
  }
  return e;
}

IdentityTraits random_traits(Rng& rng, FaceStyle style) {
  IdentityTraits t{};
  const bool field = style == FaceStyle::kField;
  t.background = field ? rng.uniform(0.55, 0.8) : rng.uniform(0.1, 0.4);
  t.skin = field ? rng.uniform(0.35, 0.6) : rng.uniform(0.6, 0.9);
  t.hair = rng.uniform(0.02, 0.3);
  t.feature_tone = field ? rng.uniform(0.0, 0.15) : rng.uniform(0.05, 0.25);
  const double scale = field ? rng.uniform(0.8, 0.9) : rng.uniform(0.95, 1.05);
  t.face_cx = rng.uniform(-0.05, 0.05);
  t.face_cy = rng.uniform(0.0, 0.08);
  t.face_rx = scale * rng.uniform(0.55, 0.66);
  t.face_ry = scale * rng.uniform(0.74, 0.84);
  t.hairline = t.face_cy - t.face_ry * rng.uniform(0.55, 0.75);
  t.eye_dx = scale * rng.uniform(0.21, 0.27);
  t.eye_y = t.face_cy + scale * rng.uniform(-0.2, -0.1);
  t.eye_r = scale * rng.uniform(0.07, 0.095);
  t.brow_gap = scale * rng.uniform(0.12, 0.16);
  t.brow_len = scale * rng.uniform(0.15, 0.21);
  t.brow_thickness = scale * rng.uniform(0.022, 0.036);
  t.nose_len = scale * rng.uniform(0.14, 0.22);
  t.mouth_y = t.face_cy + scale * rng.uniform(0.36, 0.46);
  t.mouth_half_width = scale * rng.uniform(0.16, 0.22);
  t.lip_thickness = scale * rng.uniform(0.028, 0.04);
  t.noise = field ? rng.uniform(0.03, 0.06) : rng.uniform(0.0, 0.02);
  t.expression_gain = field ? rng.uniform(0.6, 0.85) : rng.uniform(0.85, 1.15);
  t.texture_seed = rng.next_u64();
  return t;
}

ExpressionParams jittered_expression(Emotion emotion, const IdentityTraits& traits, Rng& rng) {
  ExpressionParams e = expression_prototype(emotion);
  auto jitter = [&](double v) { return v * traits.expression_gain * rng.uniform(0.85, 1.15); };
  e.mouth_curve = jitter(e.mouth_curve);
  e.mouth_open = jitter(e.mouth_open);
  e.mouth_tilt = jitter(e.mouth_tilt);
  e.brow_inner = jitter(e.brow_inner);
  e.brow_raise = jitter(e.brow_raise);
  e.nose_wrinkle = std::clamp(jitter(e.nose_wrinkle), 0.0, 1.0);
  e.mouth_width = 1.0 + (e.mouth_width - 1.0) * traits.expression_gain * rng.uniform(0.85, 1.15);
  e.eye_open = 1.0 + (e.eye_open - 1.0) * traits.expression_gain * rng.uniform(0.85, 1.15);
  return e;
}

ImageTensor render_face(const IdentityTraits& t, const ExpressionParams& e, std::size_t size) {
  if (size < 8) throw ConfigError("procedural faces need at least 8x8 pixels");
  ImageTensor image(size, size, 1);
  const double pixel = 2.0 / static_cast<double>(size);
  const Vec2 face_c{t.face_cx, t.face_cy};
  const double mouth_hw = t.mouth_half_width * e.mouth_width;
  const double mouth_y = t.mouth_y;
  const double brow_base = t.eye_y - t.brow_gap - e.brow_raise;
  const double eye_ry = std::max(t.eye_r * 0.55 * e.eye_open, 0.012);
  Rng noise(t.texture_seed);

  for (std::size_t py = 0; py < size; ++py) {
    for (std::size_t px = 0; px < size; ++px) {
      const Vec2 p{(static_cast<double>(px) + 0.5) * pixel - 1.0, (static_cast<double>(py) + 0.5) * pixel - 1.0};
      double v = t.background;

      // Hair cap: a slightly larger ellipse, above the hairline.
      const double head = ellipse_sdf(p, face_c, t.face_rx * 1.08, t.face_ry * 1.06);
      const double hair_alpha = coverage(head, pixel) * coverage(p.y - t.hairline, pixel);
      blend(v, t.hair, hair_alpha);

      // Face oval with soft radial shading; hair stays on top above the hairline.
      const double face = ellipse_sdf(p, face_c, t.face_rx, t.face_ry);
      const double r2 = std::pow((p.x - face_c.x) / t.face_rx, 2) + std::pow((p.y - face_c.y) / t.face_ry, 2);
      const double shaded_skin = t.skin * (1.0 - 0.12 * r2);
      blend(v, shaded_skin, coverage(face, pixel) * (1.0 - coverage(p.y - t.hairline, pixel)));

      for (const double side : {-1.0, 1.0}) {
        // Eye: dark almond with a darker pupil.
        const Vec2 eye{t.face_cx + side * t.eye_dx, t.eye_y};
        blend(v, t.feature_tone + 0.15, coverage(ellipse_sdf(p, eye, t.eye_r, eye_ry), pixel));
        blend(v, t.feature_tone, coverage(ellipse_sdf(p, eye, t.eye_r * 0.45, std::min(eye_ry, t.eye_r * 0.45)), pixel));

        // Brow: capsule from inner to outer end; inner end moves with the expression.
        const Vec2 inner{t.face_cx + side * (t.eye_dx - 0.5 * t.brow_len), brow_base + e.brow_inner};
        const Vec2 outer{t.face_cx + side * (t.eye_dx + 0.5 * t.brow_len), brow_base - 0.3 * e.brow_inner};
        blend(v, t.feature_tone, coverage(segment_distance(p, inner, outer) - t.brow_thickness, pixel));
      }

      // Nose ridge and, for disgust, wrinkle marks across the bridge.
      const Vec2 nose_top{t.face_cx, t.eye_y + 0.06};
      const Vec2 nose_tip{t.face_cx, t.eye_y + 0.06 + t.nose_len};
      blend(v, t.skin * 0.7, 0.8 * coverage(segment_distance(p, nose_top, nose_tip) - 0.014, pixel));
      if (e.nose_wrinkle > 0.0) {
        for (const double dy : {0.0, 0.05}) {
          const Vec2 a{t.face_cx - 0.08, t.eye_y + 0.09 + dy};
          const Vec2 b{t.face_cx + 0.08, t.eye_y + 0.09 + dy};
          blend(v, t.feature_tone + 0.1, e.nose_wrinkle * coverage(segment_distance(p, a, b) - 0.012, pixel));
        }
      }

      // Mouth: lip line y(x) = y0 + curve * (1 - (x/w)^2) + tilt * x/w, plus an
      // open cavity centred on the line.
      const double mx = (p.x - t.face_cx) / mouth_hw;
      if (std::abs(mx) <= 1.0) {
        const double line_y = mouth_y + e.mouth_curve * (1.0 - mx * mx) + e.mouth_tilt * mx;
        const double taper = 1.0 - 0.5 * mx * mx;
        blend(v, t.feature_tone, coverage(std::abs(p.y - line_y) - t.lip_thickness * taper, pixel));
      }
      if (e.mouth_open > 0.0) {
        const Vec2 cavity{t.face_cx, mouth_y + 0.5 * e.mouth_curve};
        blend(v, t.feature_tone * 0.5, coverage(ellipse_sdf(p, cavity, mouth_hw * 0.85, e.mouth_open), pixel));
      }

      if (t.noise > 0.0) v += noise.normal(0.0, t.noise);
      image.at(py, px) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return image;
}

}  // namespace fergan::gan
