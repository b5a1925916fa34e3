#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "drl/experts.hpp"
#include "drl/fusion.hpp"
#include "drl/scene.hpp"

namespace drl {

// Fixed policy action enumeration: call one of the five experts, or
// finalize with one of the five strategies. The camera-type tool is
// auto-executed on reset and is not policy-selectable.
inline constexpr int kPoolSize = 5;
inline constexpr int kNumActions = 10;
inline constexpr int kDefaultMaxTurns = 5;

constexpr std::array<FusionStrategy, 5> kFinalizeOrder = {
    FusionStrategy::Mean, FusionStrategy::Max, FusionStrategy::Min,
    FusionStrategy::WeightedInvDev, FusionStrategy::Identity};

enum class ActionType { EstimateCameraType, CallExpert, Finalize };

struct Action {
  ActionType type = ActionType::EstimateCameraType;
  int expert = -1;  // pool index, CallExpert only
  FusionStrategy strategy = FusionStrategy::Identity;

  static Action call(int pool_index) {
    return Action{ActionType::CallExpert, pool_index, FusionStrategy::Identity};
  }
  static Action finalize(FusionStrategy s) { return Action{ActionType::Finalize, -1, s}; }

  static Action from_index(int a) {
    if (a < 0 || a >= kNumActions) throw std::invalid_argument("Action: bad index");
    if (a < kPoolSize) return call(a);
    return finalize(kFinalizeOrder[static_cast<std::size_t>(a - kPoolSize)]);
  }
};

struct CalledExpert {
  int pool_index = -1;
  AuxFeatures aux;
};

// One multi-turn episode on one sample. The state holds non-owning views of
// the sample, pool and the (precomputed, deterministic) expert predictions;
// the caller keeps them alive for the episode's duration.
struct EpisodeState {
  const Sample* sample = nullptr;
  const ExpertPool* pool = nullptr;
  const std::vector<ExpertPrediction>* preds = nullptr;
  int max_turns = kDefaultMaxTurns;

  int turn = 0;
  std::optional<CoarseCamera> camera_estimate;
  std::vector<CalledExpert> called;
  std::optional<Solution> finalized;
  DepthMap final_depth;
  bool invalid = false;  // illegal action or budget-forced termination

  bool has_called(int pool_index) const {
    for (const auto& c : called) {
      if (c.pool_index == pool_index) return true;
    }
    return false;
  }
  bool done() const { return finalized.has_value(); }
};

inline std::array<std::uint8_t, kNumActions> legal_actions(const EpisodeState& st) {
  std::array<std::uint8_t, kNumActions> mask{};
  if (st.done() || st.invalid || st.turn >= st.max_turns) return mask;
  for (int e = 0; e < kPoolSize; ++e) {
    mask[static_cast<std::size_t>(e)] = static_cast<std::uint8_t>(!st.has_called(e));
  }
  const std::size_t n_called = st.called.size();
  for (std::size_t s = 0; s < kFinalizeOrder.size(); ++s) {
    const bool identity = kFinalizeOrder[s] == FusionStrategy::Identity;
    const bool ok = identity ? n_called == 1 : n_called >= 2;
    mask[kPoolSize + s] = static_cast<std::uint8_t>(ok);
  }
  return mask;
}

namespace detail {

inline void apply_finalize(EpisodeState& st, FusionStrategy strategy) {
  std::vector<const DepthMap*> maps;
  std::vector<std::string> ids;
  maps.reserve(st.called.size());
  ids.reserve(st.called.size());
  for (const auto& c : st.called) {
    maps.push_back(&(*st.preds)[static_cast<std::size_t>(c.pool_index)].depth);
    ids.push_back((*st.pool)[static_cast<std::size_t>(c.pool_index)].expert_id);
  }
  st.final_depth = fuse(maps, strategy);
  st.finalized = Solution(std::move(ids), strategy);
}

// Every episode must end with a scoreable depth map: when the budget runs
// out (or an illegal action voids the episode) we finalize over whatever was
// called, falling back to the first pool expert if nothing was.
inline void force_terminate(EpisodeState& st) {
  st.invalid = true;
  if (st.done()) return;
  if (st.called.empty()) {
    st.called.push_back(CalledExpert{0, (*st.preds)[0].aux});
  }
  apply_finalize(st, st.called.size() == 1 ? FusionStrategy::Identity
                                           : FusionStrategy::Mean);
}

}  // namespace detail

inline EpisodeState reset(const Sample& sample, const ExpertPool& pool,
                          const std::vector<ExpertPrediction>& preds,
                          int max_turns = kDefaultMaxTurns) {
  if (pool.size() != kPoolSize || preds.size() != pool.size()) {
    throw std::invalid_argument("reset: pool and predictions must hold 5 experts");
  }
  if (max_turns < 1) throw std::invalid_argument("reset: max_turns must be >= 1");
  EpisodeState st;
  st.sample = &sample;
  st.pool = &pool;
  st.preds = &preds;
  st.max_turns = max_turns;
  // The camera tool carries no decision content, so it runs automatically
  // as turn 1 and returns the sample's observed coarse label.
  st.camera_estimate = sample.observed_camera;
  st.turn = 1;
  if (st.turn >= st.max_turns) detail::force_terminate(st);
  return st;
}

inline void step(EpisodeState& st, const Action& action) {
  if (st.done()) throw std::logic_error("step: episode already finalized");

  auto is_legal = [&]() -> bool {
    if (st.turn >= st.max_turns) return false;
    switch (action.type) {
      case ActionType::EstimateCameraType:
        return !st.camera_estimate.has_value();
      case ActionType::CallExpert:
        return action.expert >= 0 && action.expert < kPoolSize &&
               !st.has_called(action.expert);
      case ActionType::Finalize:
        return action.strategy == FusionStrategy::Identity ? st.called.size() == 1
                                                           : st.called.size() >= 2;
    }
    return false;
  };

  if (!is_legal()) {
    detail::force_terminate(st);
    return;
  }

  switch (action.type) {
    case ActionType::EstimateCameraType:
      st.camera_estimate = st.sample->observed_camera;
      break;
    case ActionType::CallExpert:
      st.called.push_back(CalledExpert{
          action.expert, (*st.preds)[static_cast<std::size_t>(action.expert)].aux});
      break;
    case ActionType::Finalize:
      detail::apply_finalize(st, action.strategy);
      break;
  }
  ++st.turn;

  if (!st.done() && st.turn >= st.max_turns) detail::force_terminate(st);
}

// 1.0 iff the episode finalized voluntarily within the budget with at least
// one expert called and a legal Solution.
inline double validity_reward(const EpisodeState& st) {
  return (st.done() && !st.invalid && !st.called.empty()) ? 1.0 : 0.0;
}

// Fixed-length policy features: observed scene one-hot (2), camera estimate
// one-hot plus unknown (3), called flags (5), per-expert aux blocks (5x5,
// depths scaled by 1/100 m), normalized turn (1).
inline constexpr int kFeatureDim = 36;
inline constexpr double kDepthFeatureScale = 1.0 / 100.0;

using FeatureVector = std::array<double, kFeatureDim>;

inline FeatureVector featurize(const EpisodeState& st) {
  FeatureVector f{};
  f[st.sample->observed_scene == SceneType::Indoor ? 0 : 1] = 1.0;
  if (st.camera_estimate.has_value()) {
    f[*st.camera_estimate == CoarseCamera::PerspectiveLike ? 2 : 3] = 1.0;
  } else {
    f[4] = 1.0;
  }
  for (const auto& c : st.called) {
    f[5 + static_cast<std::size_t>(c.pool_index)] = 1.0;
    const std::size_t base = 10 + 5 * static_cast<std::size_t>(c.pool_index);
    f[base + 0] = c.aux.mean_depth * kDepthFeatureScale;
    f[base + 1] = c.aux.std_depth * kDepthFeatureScale;
    f[base + 2] = c.aux.min_depth * kDepthFeatureScale;
    f[base + 3] = c.aux.max_depth * kDepthFeatureScale;
    f[base + 4] = c.aux.valid_fraction;
  }
  f[35] = static_cast<double>(st.turn) / st.max_turns;
  return f;
}

// Features of the post-reset state (camera tool executed, nothing called),
// computable without expert predictions.
inline FeatureVector initial_features(const Sample& sample,
                                      int max_turns = kDefaultMaxTurns) {
  EpisodeState st;
  st.sample = &sample;
  st.max_turns = max_turns;
  st.camera_estimate = sample.observed_camera;
  st.turn = 1;
  return featurize(st);
}

}  // namespace drl
