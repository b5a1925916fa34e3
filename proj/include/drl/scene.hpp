#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "drl/depth_map.hpp"
#include "drl/rng.hpp"

namespace drl {

enum class CameraDomain { Perspective, ErpVariant, NativeErp, Fisheye };
enum class SceneType { Indoor, Outdoor };
enum class CoarseCamera { PerspectiveLike, ErpLike };

constexpr std::array<CameraDomain, 4> kAllDomains = {
    CameraDomain::Perspective, CameraDomain::ErpVariant,
    CameraDomain::NativeErp, CameraDomain::Fisheye};

inline const char* to_string(CameraDomain d) {
  switch (d) {
    case CameraDomain::Perspective: return "perspective";
    case CameraDomain::ErpVariant: return "erp_variant";
    case CameraDomain::NativeErp: return "native_erp";
    case CameraDomain::Fisheye: return "fisheye";
  }
  return "?";
}

inline const char* to_string(SceneType s) {
  return s == SceneType::Indoor ? "indoor" : "outdoor";
}

inline const char* to_string(CoarseCamera c) {
  return c == CoarseCamera::PerspectiveLike ? "perspective_like" : "erp_like";
}

// ERP variants carry perspective content, so their coarse camera label is
// perspective-like; only native panoramas and fisheye count as erp-like.
inline CoarseCamera coarse_camera(CameraDomain d) {
  switch (d) {
    case CameraDomain::Perspective:
    case CameraDomain::ErpVariant:
      return CoarseCamera::PerspectiveLike;
    default:
      return CoarseCamera::ErpLike;
  }
}

struct SceneSpec {
  CameraDomain domain = CameraDomain::Perspective;
  SceneType scene = SceneType::Indoor;
  std::uint64_t seed = 0;
  int width = 64;
  int height = 48;
  double depth_min = 0.5;   // meters
  double depth_max = 10.0;  // meters
};

struct LabelNoise {
  double p_scene = 0.05;
  double p_cam = 0.10;
};

struct Sample {
  SceneSpec spec;
  DepthMap gt;
  SceneType observed_scene = SceneType::Indoor;
  CoarseCamera observed_camera = CoarseCamera::PerspectiveLike;
  std::string sample_id;
};

// Band-limited random field: a sum of fixed-amplitude cosines with random
// direction, frequency and phase. With amplitude sqrt(2/N) the field has
// zero mean and unit variance pointwise (over the phase draw).
struct CosineField {
  struct Term {
    double kx, ky, phase;
  };
  std::vector<Term> terms;
  double amplitude = 1.0;

  static CosineField random(Rng& rng, int n_terms, double min_cycles, double max_cycles) {
    CosineField f;
    f.terms.resize(static_cast<std::size_t>(n_terms));
    constexpr double kTwoPi = 6.283185307179586476925287;
    for (auto& t : f.terms) {
      const double angle = uniform(rng, 0.0, kTwoPi);
      const double cycles = uniform(rng, min_cycles, max_cycles);
      t.kx = kTwoPi * cycles * std::cos(angle);
      t.ky = kTwoPi * cycles * std::sin(angle);
      t.phase = uniform(rng, 0.0, kTwoPi);
    }
    f.amplitude = std::sqrt(2.0 / n_terms);
    return f;
  }

  double operator()(double u, double v) const {
    double s = 0.0;
    for (const auto& t : terms) s += std::cos(t.kx * u + t.ky * v + t.phase);
    return amplitude * s;
  }
};

// Field values at pixel centers, x fastest, coordinates normalized to [0,1].
inline std::vector<double> evaluate_field(const CosineField& field, int width, int height) {
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  std::size_t i = 0;
  for (int y = 0; y < height; ++y) {
    const double v = (y + 0.5) / height;
    for (int x = 0; x < width; ++x, ++i) {
      out[i] = field((x + 0.5) / width, v);
    }
  }
  return out;
}

inline constexpr int kSceneFieldTerms = 24;

// Ground truth is exp of a band-limited field, affinely mapped onto the
// spec's depth range, so every sample spans [depth_min, depth_max].
inline DepthMap generate_gt(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) {
    throw std::invalid_argument("generate_gt: degenerate dimensions");
  }
  if (!(spec.depth_min > 0.0) || !(spec.depth_min < spec.depth_max)) {
    throw std::invalid_argument("generate_gt: bad depth range");
  }
  Rng rng(derive_seed(spec.seed, "scene-field"));
  const CosineField field = CosineField::random(rng, kSceneFieldTerms, 0.5, 4.0);
  std::vector<double> raw = evaluate_field(field, spec.width, spec.height);

  double lo = raw[0], hi = raw[0];
  for (double r : raw) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  DepthMap gt(spec.width, spec.height);
  if (hi - lo < 1e-12) {
    const float mid = static_cast<float>(0.5 * (spec.depth_min + spec.depth_max));
    std::fill(gt.values.begin(), gt.values.end(), mid);
  } else {
    const double elo = std::exp(lo), ehi = std::exp(hi);
    const double scale = (spec.depth_max - spec.depth_min) / (ehi - elo);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      gt.values[i] = static_cast<float>(spec.depth_min + (std::exp(raw[i]) - elo) * scale);
    }
  }
  std::fill(gt.valid.begin(), gt.valid.end(), 1);
  return gt;
}

// Each observed label equals the true (coarse) label with probability 1-p.
// Labels are drawn once at generation time and frozen on the Sample.
inline std::pair<SceneType, CoarseCamera> observe_labels(const SceneSpec& spec,
                                                         const LabelNoise& noise,
                                                         Rng& rng) {
  if (noise.p_scene < 0.0 || noise.p_scene >= 0.5 || noise.p_cam < 0.0 ||
      noise.p_cam >= 0.5) {
    throw std::invalid_argument("observe_labels: flip probabilities must lie in [0, 0.5)");
  }
  SceneType scene = spec.scene;
  if (bernoulli(rng, noise.p_scene)) {
    scene = scene == SceneType::Indoor ? SceneType::Outdoor : SceneType::Indoor;
  }
  CoarseCamera cam = coarse_camera(spec.domain);
  if (bernoulli(rng, noise.p_cam)) {
    cam = cam == CoarseCamera::PerspectiveLike ? CoarseCamera::ErpLike
                                               : CoarseCamera::PerspectiveLike;
  }
  return {scene, cam};
}

inline std::string make_sample_id(const SceneSpec& spec) {
  static const char* hex = "0123456789abcdef";
  std::uint64_t tag = mix64(spec.seed ^ hash_str("sample-id"));
  std::string id = to_string(spec.domain);
  id += '-';
  for (int i = 60; i >= 0; i -= 4) id += hex[(tag >> i) & 0xf];
  return id;
}

inline Sample generate_scene(const SceneSpec& spec, const LabelNoise& noise = {}) {
  Sample s;
  s.spec = spec;
  s.gt = generate_gt(spec);
  Rng label_rng(derive_seed(spec.seed, "labels"));
  auto [scene, cam] = observe_labels(spec, noise, label_rng);
  s.observed_scene = scene;
  s.observed_camera = cam;
  s.sample_id = make_sample_id(spec);
  return s;
}

}  // namespace drl
