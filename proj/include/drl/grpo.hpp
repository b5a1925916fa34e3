#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "drl/analysis.hpp"
#include "drl/parallel.hpp"
#include "drl/policy.hpp"

namespace drl {

enum class StdMode { Population, Sample };

struct GrpoConfig {
  int group_size = 8;
  double learning_rate = 0.01;
  double clip_eps = 0.2;
  double kl_coeff = 0.0;
  int epochs_per_batch = 1;
  int steps = 300;
  int batch_samples = 4;
  StdMode std_mode = StdMode::Population;
  double adv_eps = 1e-8;

  void validate() const {
    if (group_size < 2) throw std::invalid_argument("GrpoConfig: group_size must be >= 2");
    if (!(clip_eps > 0.0)) throw std::invalid_argument("GrpoConfig: clip_eps must be > 0");
    if (batch_samples < 1 || epochs_per_batch < 1 || steps < 0) {
      throw std::invalid_argument("GrpoConfig: bad loop sizes");
    }
  }
};

struct GroupAdvantages {
  std::vector<double> total;  // per rollout: sum over channels
  std::vector<std::array<double, RewardVector::kChannels>> per_channel;
};

// Per-channel group normalization: A_(k)^i = (r_(k)^i - mean_k) / std_k,
// summed over channels. A channel whose std falls below adv_eps is
// degenerate and contributes exactly zero.
inline GroupAdvantages group_advantages(const std::vector<RewardVector>& rewards,
                                        const GrpoConfig& cfg) {
  cfg.validate();
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("group_advantages: need G >= 2 rollouts");

  GroupAdvantages out;
  out.total.assign(g, 0.0);
  out.per_channel.assign(g, {});

  for (int k = 0; k < RewardVector::kChannels; ++k) {
    double mean = 0.0;
    for (const auto& r : rewards) mean += r[k];
    mean /= static_cast<double>(g);
    double var = 0.0;
    for (const auto& r : rewards) {
      const double d = r[k] - mean;
      var += d * d;
    }
    var /= cfg.std_mode == StdMode::Population ? static_cast<double>(g)
                                               : static_cast<double>(g - 1);
    const double std = std::sqrt(var);
    if (std < cfg.adv_eps) continue;
    for (std::size_t i = 0; i < g; ++i) {
      const double a = (rewards[i][k] - mean) / std;
      out.per_channel[i][static_cast<std::size_t>(k)] = a;
      out.total[i] += a;
    }
  }
  return out;
}

struct PolicyGradient {
  std::vector<double> W;
  std::vector<double> b;

  static PolicyGradient zeros() {
    PolicyGradient g;
    g.W.assign(static_cast<std::size_t>(PolicyParams::kRows) * kFeatureDim, 0.0);
    g.b.assign(PolicyParams::kRows, 0.0);
    return g;
  }

  bool finite() const {
    for (double v : W) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : b) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

namespace detail {

// Adds coef * d(log pi(action)) / d(theta) for a masked softmax step:
// dz log pi = onehot(action) - pi over the participating rows.
template <std::size_t N>
inline void accumulate_logprob_grad(const FeatureVector& features,
                                    const std::array<double, N>& probs,
                                    const std::vector<int>& rows, int action_pos,
                                    double coef, PolicyGradient& grad) {
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double dz = (static_cast<int>(r) == action_pos ? 1.0 : 0.0) - probs[r];
    const double c = coef * dz;
    if (c == 0.0) continue;
    double* wrow = &grad.W[static_cast<std::size_t>(rows[r]) * kFeatureDim];
    for (int j = 0; j < kFeatureDim; ++j) {
      wrow[j] += c * features[static_cast<std::size_t>(j)];
    }
    grad.b[static_cast<std::size_t>(rows[r])] += c;
  }
}

// Adds coef * dKL(pi_new || pi_old)/dtheta; dz KL = pi (log pi - log pi_old - KL).
template <std::size_t N>
inline double accumulate_kl(const FeatureVector& features,
                            const std::array<double, N>& probs_new,
                            const std::array<double, N>& probs_old,
                            const std::vector<int>& rows, double coef,
                            PolicyGradient* grad) {
  double kl = 0.0;
  std::array<double, N> logratio{};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (probs_new[r] <= 0.0) continue;
    logratio[r] = std::log(probs_new[r]) - std::log(probs_old[r]);
    kl += probs_new[r] * logratio[r];
  }
  if (grad) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (probs_new[r] <= 0.0) continue;
      const double c = coef * probs_new[r] * (logratio[r] - kl);
      if (c == 0.0) continue;
      double* wrow = &grad->W[static_cast<std::size_t>(rows[r]) * kFeatureDim];
      for (int j = 0; j < kFeatureDim; ++j) {
        wrow[j] += c * features[static_cast<std::size_t>(j)];
      }
      grad->b[static_cast<std::size_t>(rows[r])] += c;
    }
  }
  return kl;
}

}  // namespace detail

// Clipped-surrogate objective over a batch of rollouts, each weighted by its
// total advantage; the scene pseudo-step participates with the normalized
// scene-channel advantage. Returns the objective value and, when grad is
// non-null, its exact analytic gradient (gradient ascent direction).
//
//   J = (1/N) sum_i (1/T_i) [ sum_t min(rho_t A, clip(rho_t) A) - beta KL_t ]
inline double grpo_surrogate(const PolicyParams& policy,
                             const std::vector<Rollout>& rollouts,
                             const std::vector<double>& total_adv,
                             const std::vector<double>& scene_adv,
                             const GrpoConfig& cfg, PolicyGradient* grad) {
  if (rollouts.empty()) throw std::invalid_argument("grpo_surrogate: empty batch");
  if (total_adv.size() != rollouts.size() || scene_adv.size() != rollouts.size()) {
    throw std::invalid_argument("grpo_surrogate: advantage size mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(rollouts.size());
  const std::vector<int> scene_rows = {kNumActions, kNumActions + 1};

  double objective = 0.0;
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const Rollout& r = rollouts[i];
    const double inv_t = 1.0 / static_cast<double>(r.steps.size() + 1);
    const double w = inv_n * inv_t;

    auto add_step = [&](const FeatureVector& features, const auto& probs_new,
                        const auto& probs_old, const std::vector<int>& rows,
                        int action_pos, double old_logprob, double advantage) {
      const double lp_new = std::log(probs_new[static_cast<std::size_t>(action_pos)]);
      const double rho = std::exp(lp_new - old_logprob);
      const double lo = 1.0 - cfg.clip_eps, hi = 1.0 + cfg.clip_eps;
      const double clipped_rho = std::min(std::max(rho, lo), hi);
      objective += w * std::min(rho * advantage, clipped_rho * advantage);
      if (grad) {
        const bool clipped_out = (advantage >= 0.0 && rho > hi) ||
                                 (advantage <= 0.0 && rho < lo);
        if (!clipped_out && advantage != 0.0) {
          detail::accumulate_logprob_grad(features, probs_new, rows, action_pos,
                                          w * rho * advantage, *grad);
        }
      }
      if (cfg.kl_coeff != 0.0) {
        objective -= cfg.kl_coeff * w *
                     detail::accumulate_kl(features, probs_new, probs_old, rows,
                                           -cfg.kl_coeff * w, grad);
      }
    };

    for (const RolloutStep& step : r.steps) {
      const auto probs_new = action_distribution(policy, step.features, step.mask);
      std::vector<int> rows;
      std::array<double, kNumActions> pn{}, po{};
      int action_pos = -1;
      for (int a = 0; a < kNumActions; ++a) {
        if (!step.mask[static_cast<std::size_t>(a)]) continue;
        if (a == step.action) action_pos = static_cast<int>(rows.size());
        pn[rows.size()] = probs_new[static_cast<std::size_t>(a)];
        po[rows.size()] = step.probs[static_cast<std::size_t>(a)];
        rows.push_back(a);
      }
      add_step(step.features, pn, po, rows, action_pos, step.logprob, total_adv[i]);
    }

    const auto scene_new = scene_distribution(policy, r.scene_features);
    add_step(r.scene_features, scene_new, r.scene_probs, scene_rows,
             r.scene_prediction, r.scene_logprob, scene_adv[i]);
  }
  return objective;
}

// One gradient-ascent step on the surrogate. A non-finite gradient aborts
// the step and leaves the parameters untouched; returns whether the step
// was applied.
inline bool grpo_update(PolicyParams& policy, const std::vector<Rollout>& rollouts,
                        const std::vector<double>& total_adv,
                        const std::vector<double>& scene_adv, const GrpoConfig& cfg) {
  PolicyGradient grad = PolicyGradient::zeros();
  grpo_surrogate(policy, rollouts, total_adv, scene_adv, cfg, &grad);
  if (!grad.finite()) return false;
  for (std::size_t i = 0; i < policy.W.size(); ++i) {
    policy.W[i] += cfg.learning_rate * grad.W[i];
  }
  for (std::size_t i = 0; i < policy.b.size(); ++i) {
    policy.b[i] += cfg.learning_rate * grad.b[i];
  }
  return true;
}

// Per-domain reward configuration: perspective-like content trains with a
// sharp efficiency gate, erp-like content with a soft one.
struct RewardConfigSet {
  RewardConfig perspective_like{1.0, 0.1, 1e-8, 2, ReferencePolicy::Oracle};
  RewardConfig erp_like{0.2, 3.4, 1e-8, 2, ReferencePolicy::Oracle};

  const RewardConfig& for_domain(CameraDomain d) const {
    return coarse_camera(d) == CoarseCamera::PerspectiveLike ? perspective_like
                                                             : erp_like;
  }
};

inline ReferenceSolution make_reference(const Sample& sample, const ExpertPool& pool,
                                        const std::vector<ExpertPrediction>& preds,
                                        const std::vector<Solution>& candidates,
                                        ReferencePolicy which) {
  ReferenceSolution ref;
  if (which == ReferencePolicy::Oracle) {
    auto [solution, metrics] = oracle_solution(sample, candidates, preds);
    ref.solution = solution;
    ref.delta1 = metrics.delta1;
  } else {
    int best = 0;
    double best_d = -1.0;
    for (std::size_t e = 0; e < preds.size(); ++e) {
      const double d = compute_metrics(preds[e].depth, sample.gt).delta1;
      if (d > best_d) {
        best_d = d;
        best = static_cast<int>(e);
      }
    }
    ref.solution = Solution({pool[static_cast<std::size_t>(best)].expert_id},
                            FusionStrategy::Identity);
    ref.delta1 = best_d;
  }
  ref.n_experts = static_cast<int>(ref.solution.experts.size());
  return ref;
}

struct TrainLogRow {
  int step = 0;
  std::array<double, RewardVector::kChannels> mean_reward{};
  double mean_abs_advantage = 0.0;
  double mean_delta1 = 0.0;
  double mean_solution_size = 0.0;
  double mean_expert_calls = 0.0;
  double entropy = 0.0;
};

struct TrainResult {
  PolicyParams policy;
  std::vector<TrainLogRow> log;
  int aborted_updates = 0;
};

using RolloutSink = std::function<void(int step, const Rollout&)>;

// Produces the five pool predictions for one sample. The default simulates;
// dataset-backed providers may substitute externally ingested rasters.
using PredictionProvider =
    std::function<std::vector<ExpertPrediction>(std::size_t, const Sample&)>;

// Deterministic per-sample working set shared by train and the eval-style
// commands: predictions for the full pool plus the reference solution.
class SampleWorkspace {
 public:
  SampleWorkspace(const std::vector<Sample>& samples, const ExpertPool& pool,
                  std::vector<Solution> candidates, ReferencePolicy reference,
                  PredictionProvider provider = nullptr)
      : samples_(samples),
        pool_(pool),
        candidates_(std::move(candidates)),
        reference_(reference),
        provider_(std::move(provider)),
        preds_(samples.size()),
        refs_(samples.size()) {}

  const std::vector<Sample>& samples() const { return samples_; }
  const ExpertPool& pool() const { return pool_; }
  const std::vector<Solution>& candidates() const { return candidates_; }

  // Must be called for an index before predictions()/reference(); safe to
  // call from parallel_for as long as each index is prepared by one worker.
  void prepare(std::size_t index) {
    if (preds_[index]) return;
    auto preds = std::make_unique<std::vector<ExpertPrediction>>(
        provider_ ? provider_(index, samples_[index])
                  : predict_pool(pool_, samples_[index]));
    refs_[index] = make_reference(samples_[index], pool_, *preds, candidates_, reference_);
    preds_[index] = std::move(preds);
  }

  const std::vector<ExpertPrediction>& predictions(std::size_t index) const {
    return *preds_[index];
  }
  const ReferenceSolution& reference(std::size_t index) const { return *refs_[index]; }

 private:
  const std::vector<Sample>& samples_;
  const ExpertPool& pool_;
  std::vector<Solution> candidates_;
  ReferencePolicy reference_;
  PredictionProvider provider_;
  std::vector<std::unique_ptr<std::vector<ExpertPrediction>>> preds_;
  std::vector<std::optional<ReferenceSolution>> refs_;
};

// GRPO training loop: each step draws a batch of samples, samples G rollouts
// per sample, normalizes rewards per group (Eq. of the multi-reward scheme),
// and applies one clipped-surrogate ascent step per epoch. Fully
// deterministic given the master seed; rollouts are reduced in slot order.
inline TrainResult train(SampleWorkspace& ws, const RewardConfigSet& reward_cfg,
                         const GrpoConfig& cfg, std::uint64_t master_seed,
                         int max_turns = kDefaultMaxTurns,
                         const RolloutSink& sink = nullptr,
                         PolicyParams initial = PolicyParams::zeros()) {
  cfg.validate();
  reward_cfg.perspective_like.validate();
  reward_cfg.erp_like.validate();
  if (ws.samples().empty()) throw std::invalid_argument("train: empty dataset");

  TrainResult result;
  result.policy = std::move(initial);

  const std::uint64_t rollout_base = derive_seed(master_seed, "rollout");
  const std::size_t group = static_cast<std::size_t>(cfg.group_size);

  for (int step_idx = 0; step_idx < cfg.steps; ++step_idx) {
    const std::uint64_t step_seed =
        derive_seed(rollout_base, "step", static_cast<std::uint64_t>(step_idx));

    Rng batch_rng(derive_seed(step_seed, "batch"));
    std::vector<std::size_t> batch(static_cast<std::size_t>(cfg.batch_samples));
    for (auto& idx : batch) {
      idx = static_cast<std::size_t>(uniform_index(batch_rng, ws.samples().size()));
    }

    std::vector<std::size_t> unique = batch;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    parallel_for(unique.size(), [&](std::size_t i) { ws.prepare(unique[i]); });

    std::vector<Rollout> rollouts;
    std::vector<double> total_adv, scene_adv;
    rollouts.reserve(batch.size() * group);

    TrainLogRow row;
    row.step = step_idx;
    std::size_t n_env_steps = 0;

    for (std::size_t bslot = 0; bslot < batch.size(); ++bslot) {
      const std::size_t sidx = batch[bslot];
      const Sample& sample = ws.samples()[sidx];
      const RewardConfig& rcfg = reward_cfg.for_domain(sample.spec.domain);

      std::vector<RewardVector> rewards(group);
      std::vector<Rollout> group_rollouts(group);
      for (std::size_t g = 0; g < group; ++g) {
        Rng rng(derive_seed(step_seed, "episode", bslot * group + g));
        Rollout r = sample_rollout(result.policy, sample, ws.pool(),
                                   ws.predictions(sidx), RolloutMode::Stochastic,
                                   &rng, max_turns);
        r.sample_index = static_cast<int>(sidx);
        r.rewards = score_rollout(r, sample, ws.reference(sidx), rcfg, ws.pool());
        rewards[g] = r.rewards;
        group_rollouts[g] = std::move(r);
      }

      const GroupAdvantages adv = group_advantages(rewards, cfg);
      for (std::size_t g = 0; g < group; ++g) {
        const Rollout& r = group_rollouts[g];
        for (int k = 0; k < RewardVector::kChannels; ++k) {
          row.mean_reward[static_cast<std::size_t>(k)] += r.rewards[k];
        }
        row.mean_abs_advantage += std::abs(adv.total[g]);
        row.mean_delta1 += r.final_metrics.delta1;
        row.mean_solution_size += r.solution_size();
        row.mean_expert_calls += r.expert_calls;
        for (const RolloutStep& s : r.steps) {
          double h = 0.0;
          for (double p : s.probs) {
            if (p > 0.0) h -= p * std::log(p);
          }
          row.entropy += h;
          ++n_env_steps;
        }
        if (sink) sink(step_idx, r);
        total_adv.push_back(adv.total[g]);
        scene_adv.push_back(adv.per_channel[g][1]);  // r_scene channel
        rollouts.push_back(group_rollouts[g]);
      }
    }

    const double n_rollouts = static_cast<double>(rollouts.size());
    for (auto& v : row.mean_reward) v /= n_rollouts;
    row.mean_abs_advantage /= n_rollouts;
    row.mean_delta1 /= n_rollouts;
    row.mean_solution_size /= n_rollouts;
    row.mean_expert_calls /= n_rollouts;
    row.entropy = n_env_steps > 0 ? row.entropy / static_cast<double>(n_env_steps) : 0.0;
    result.log.push_back(row);

    for (int epoch = 0; epoch < cfg.epochs_per_batch; ++epoch) {
      if (!grpo_update(result.policy, rollouts, total_adv, scene_adv, cfg)) {
        ++result.aborted_updates;
        break;
      }
    }
  }
  return result;
}

struct EvalRecord {
  std::string sample_id;
  CameraDomain domain = CameraDomain::Perspective;
  MetricSet metrics;
  Solution solution;
  int expert_calls = 0;
  bool valid = false;
};

struct EvalResult {
  std::vector<EvalRecord> records;  // dataset order
  double mean_solution_size = 0.0;  // n-bar over all records
};

// Greedy rollouts over a dataset: a pure function of (policy, samples).
inline EvalResult evaluate(const PolicyParams& policy, const std::vector<Sample>& samples,
                           const ExpertPool& pool, int max_turns = kDefaultMaxTurns,
                           const PredictionProvider& provider = nullptr) {
  EvalResult result;
  result.records.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const std::vector<ExpertPrediction> preds =
        provider ? provider(i, samples[i]) : predict_pool(pool, samples[i]);
    const Rollout r = sample_rollout(policy, samples[i], pool, preds,
                                     RolloutMode::Greedy, nullptr, max_turns);
    EvalRecord rec;
    rec.sample_id = samples[i].sample_id;
    rec.domain = samples[i].spec.domain;
    rec.metrics = r.final_metrics;
    rec.solution = r.solution;
    rec.expert_calls = r.expert_calls;
    rec.valid = r.valid;
    result.records[i] = std::move(rec);
  });
  double n_sum = 0.0;
  for (const auto& rec : result.records) {
    n_sum += static_cast<double>(rec.solution.experts.size());
  }
  result.mean_solution_size =
      result.records.empty() ? 0.0 : n_sum / static_cast<double>(result.records.size());
  return result;
}

// Top selected solutions per group, ordered by frequency then label.
inline std::vector<std::pair<std::string, std::size_t>> solution_frequency(
    const std::vector<EvalRecord>& records, CameraDomain domain) {
  std::map<std::string, std::size_t> counts;
  for (const auto& rec : records) {
    if (rec.domain == domain) counts[rec.solution.label()]++;
  }
  std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

}  // namespace drl
