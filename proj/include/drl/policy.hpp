#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "drl/episode.hpp"
#include "drl/rewards.hpp"
#include "drl/rng.hpp"

namespace drl {

// Linear-softmax policy over the 10 episode actions plus a two-row scene
// prediction head (rows 10 Indoor, 11 Outdoor). Small enough that every
// gradient is hand-derived and checkable against finite differences.
struct PolicyParams {
  static constexpr int kRows = kNumActions + 2;

  std::vector<double> W;  // kRows x kFeatureDim, row-major
  std::vector<double> b;  // kRows

  static PolicyParams zeros() {
    PolicyParams p;
    p.W.assign(static_cast<std::size_t>(kRows) * kFeatureDim, 0.0);
    p.b.assign(kRows, 0.0);
    return p;
  }

  double logit(int row, const FeatureVector& f) const {
    const double* w = &W[static_cast<std::size_t>(row) * kFeatureDim];
    double z = b[static_cast<std::size_t>(row)];
    for (int j = 0; j < kFeatureDim; ++j) z += w[j] * f[static_cast<std::size_t>(j)];
    return z;
  }
};

// Masked softmax over the action rows; illegal actions get probability
// exactly zero.
inline std::array<double, kNumActions> action_distribution(
    const PolicyParams& policy, const FeatureVector& features,
    const std::array<std::uint8_t, kNumActions>& mask) {
  std::array<double, kNumActions> probs{};
  double zmax = -1e300;
  std::array<double, kNumActions> logits{};
  bool any = false;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<std::size_t>(a)]) continue;
    logits[static_cast<std::size_t>(a)] = policy.logit(a, features);
    zmax = std::max(zmax, logits[static_cast<std::size_t>(a)]);
    any = true;
  }
  if (!any) throw std::invalid_argument("action_distribution: no legal action");
  double sum = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<std::size_t>(a)]) continue;
    probs[static_cast<std::size_t>(a)] = std::exp(logits[static_cast<std::size_t>(a)] - zmax);
    sum += probs[static_cast<std::size_t>(a)];
  }
  for (int a = 0; a < kNumActions; ++a) probs[static_cast<std::size_t>(a)] /= sum;
  return probs;
}

inline std::array<double, 2> scene_distribution(const PolicyParams& policy,
                                                const FeatureVector& features) {
  const double z0 = policy.logit(kNumActions, features);
  const double z1 = policy.logit(kNumActions + 1, features);
  const double zmax = std::max(z0, z1);
  const double e0 = std::exp(z0 - zmax), e1 = std::exp(z1 - zmax);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

enum class RolloutMode { Stochastic, Greedy };

struct RolloutStep {
  FeatureVector features{};
  std::array<std::uint8_t, kNumActions> mask{};
  std::array<double, kNumActions> probs{};  // sampling-policy distribution
  int action = 0;
  double logprob = 0.0;
};

struct Rollout {
  int sample_index = -1;
  std::string sample_id;
  CameraDomain domain = CameraDomain::Perspective;
  SceneType true_scene = SceneType::Indoor;
  CoarseCamera camera_estimate = CoarseCamera::PerspectiveLike;

  std::vector<RolloutStep> steps;

  FeatureVector scene_features{};
  std::array<double, 2> scene_probs{};
  int scene_prediction = 0;  // 0 Indoor, 1 Outdoor
  double scene_logprob = 0.0;

  Solution solution;
  MetricSet final_metrics;
  bool valid = false;
  int expert_calls = 0;

  RewardVector rewards;

  int solution_size() const { return static_cast<int>(solution.experts.size()); }
};

namespace detail {

template <std::size_t N>
inline int pick_greedy(const std::array<double, N>& probs) {
  int best = -1;
  double best_p = -1.0;
  for (std::size_t a = 0; a < N; ++a) {
    if (probs[a] > best_p) {
      best_p = probs[a];
      best = static_cast<int>(a);
    }
  }
  return best;
}

template <std::size_t N>
inline int pick_sampled(const std::array<double, N>& probs, Rng& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  int last = -1;
  for (std::size_t a = 0; a < N; ++a) {
    if (probs[a] <= 0.0) continue;
    cum += probs[a];
    last = static_cast<int>(a);
    if (u < cum) return last;
  }
  return last;  // numeric slack at u ~ 1
}

}  // namespace detail

// One episode under the policy. Greedy mode is fully deterministic
// (argmax, ties to the lowest action index); stochastic mode consumes the
// supplied rng. The scene head is read out once at the initial state: argmax
// when greedy, sampled when stochastic so the head sees exploration during
// training.
inline Rollout sample_rollout(const PolicyParams& policy, const Sample& sample,
                              const ExpertPool& pool,
                              const std::vector<ExpertPrediction>& preds,
                              RolloutMode mode, Rng* rng,
                              int max_turns = kDefaultMaxTurns) {
  if (mode == RolloutMode::Stochastic && rng == nullptr) {
    throw std::invalid_argument("sample_rollout: stochastic mode needs an rng");
  }
  Rollout r;
  r.sample_id = sample.sample_id;
  r.domain = sample.spec.domain;
  r.true_scene = sample.spec.scene;

  EpisodeState st = reset(sample, pool, preds, max_turns);
  r.camera_estimate = *st.camera_estimate;

  r.scene_features = featurize(st);
  r.scene_probs = scene_distribution(policy, r.scene_features);
  r.scene_prediction = mode == RolloutMode::Greedy
                           ? detail::pick_greedy(r.scene_probs)
                           : detail::pick_sampled(r.scene_probs, *rng);
  r.scene_logprob = std::log(r.scene_probs[static_cast<std::size_t>(r.scene_prediction)]);

  while (!st.done()) {
    RolloutStep step;
    step.features = featurize(st);
    step.mask = legal_actions(st);
    step.probs = action_distribution(policy, step.features, step.mask);
    step.action = mode == RolloutMode::Greedy ? detail::pick_greedy(step.probs)
                                              : detail::pick_sampled(step.probs, *rng);
    step.logprob = std::log(step.probs[static_cast<std::size_t>(step.action)]);
    r.steps.push_back(step);
    if (Action::from_index(step.action).type == ActionType::CallExpert) ++r.expert_calls;
    drl::step(st, Action::from_index(step.action));
  }

  r.solution = *st.finalized;
  r.final_metrics = compute_metrics(st.final_depth, sample.gt);
  r.valid = validity_reward(st) > 0.5;
  return r;
}

// Per-sample reference the efficiency reward compares against.
struct ReferenceSolution {
  Solution solution;
  double delta1 = 0.0;
  int n_experts = 1;
};

inline RewardVector score_rollout(const Rollout& rollout, const Sample& sample,
                                  const ReferenceSolution& reference,
                                  const RewardConfig& cfg, const ExpertPool& pool) {
  RewardVector rv;
  rv.r_validity = rollout.valid ? 1.0 : 0.0;
  rv.r_scene = scene_reward(
      rollout.scene_prediction == 0 ? SceneType::Indoor : SceneType::Outdoor,
      rollout.camera_estimate, sample.spec.scene, sample.spec.domain);
  rv.r_sel = selection_prior_reward(rollout.solution, sample.spec.domain, pool);
  rv.r_em = efficiency_metric_reward(rollout.final_metrics.delta1, reference.delta1,
                                     rollout.solution_size(), reference.n_experts, cfg);
  return rv;
}

}  // namespace drl
