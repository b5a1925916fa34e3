#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "drl/fusion.hpp"
#include "drl/scene.hpp"

namespace drl {

enum class ReferencePolicy { Oracle, BestSingle };

struct RewardConfig {
  double lambda = 0.2;
  double tau = 3.4;
  double eps = 1e-8;
  int n_max = 2;
  ReferencePolicy reference = ReferencePolicy::Oracle;

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("RewardConfig: tau must be > 0");
    if (!(eps > 0.0)) throw std::invalid_argument("RewardConfig: eps must be > 0");
    if (!(lambda >= 0.0)) throw std::invalid_argument("RewardConfig: lambda must be >= 0");
    if (n_max < 1) throw std::invalid_argument("RewardConfig: n_max must be >= 1");
  }
};

// The four reward channels consumed by group normalization.
struct RewardVector {
  double r_validity = 0.0;
  double r_scene = 0.0;
  double r_sel = 0.0;
  double r_em = 0.0;

  static constexpr int kChannels = 4;

  double operator[](int k) const {
    switch (k) {
      case 0: return r_validity;
      case 1: return r_scene;
      case 2: return r_sel;
      default: return r_em;
    }
  }

  static const char* channel_name(int k) {
    switch (k) {
      case 0: return "r_validity";
      case 1: return "r_scene";
      case 2: return "r_sel";
      default: return "r_em";
    }
  }
};

// Average accuracy over the scene and camera labels. An unparseable label is
// passed as nullopt and earns no credit.
inline double scene_reward(std::optional<SceneType> predicted_scene,
                           std::optional<CoarseCamera> predicted_camera,
                           SceneType true_scene, CameraDomain true_domain) {
  double credit = 0.0;
  if (predicted_scene && *predicted_scene == true_scene) credit += 1.0;
  if (predicted_camera && *predicted_camera == coarse_camera(true_domain)) credit += 1.0;
  return credit / 2.0;
}

// 1.0 when the solution contains at least one expert whose family matches
// the input domain, 0.0 otherwise.
inline double selection_prior_reward(const Solution& solution, CameraDomain domain,
                                     const ExpertPool& pool) {
  for (const auto& id : solution.experts) {
    if (family_matches_domain(find_expert(pool, id).family, domain)) return 1.0;
  }
  return 0.0;
}

// Efficiency-aware metric reward: the normalized metric gap minus an
// efficiency penalty that fades as the metric gap grows.
//   dm = (m_i - m_ref) / (|m_ref| + eps)
//   dn = (n_i - n_ref) / n_max
//   R  = dm - lambda * dn * exp(-|dm| / tau)
inline double efficiency_metric_reward(double m_i, double m_ref, int n_i, int n_ref,
                                       const RewardConfig& cfg) {
  cfg.validate();
  const double dm = (m_i - m_ref) / (std::abs(m_ref) + cfg.eps);
  const double dn = static_cast<double>(n_i - n_ref) / static_cast<double>(cfg.n_max);
  return dm - cfg.lambda * dn * std::exp(-std::abs(dm) / cfg.tau);
}

}  // namespace drl
