#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "drl/depth_map.hpp"
#include "drl/experts.hpp"
#include "drl/metrics.hpp"

namespace drl {

enum class FusionStrategy { Mean, Max, Min, WeightedInvDev, Identity };

constexpr std::array<FusionStrategy, 4> kMultiStrategies = {
    FusionStrategy::Mean, FusionStrategy::Max, FusionStrategy::Min,
    FusionStrategy::WeightedInvDev};

inline const char* to_string(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::Mean: return "mean";
    case FusionStrategy::Max: return "max";
    case FusionStrategy::Min: return "min";
    case FusionStrategy::WeightedInvDev: return "weighted_inv_dev";
    case FusionStrategy::Identity: return "identity";
  }
  return "?";
}

inline FusionStrategy fusion_strategy_from_string(const std::string& s) {
  if (s == "mean") return FusionStrategy::Mean;
  if (s == "max") return FusionStrategy::Max;
  if (s == "min") return FusionStrategy::Min;
  if (s == "weighted_inv_dev") return FusionStrategy::WeightedInvDev;
  if (s == "identity") return FusionStrategy::Identity;
  throw std::invalid_argument("unknown fusion strategy: " + s);
}

// A solution is a set of experts plus a fusion strategy; expert ids are kept
// in canonical sorted order. Identity is legal exactly for singletons.
struct Solution {
  std::vector<std::string> experts;
  FusionStrategy strategy = FusionStrategy::Identity;

  Solution() = default;
  Solution(std::vector<std::string> ids, FusionStrategy strat)
      : experts(std::move(ids)), strategy(strat) {
    std::sort(experts.begin(), experts.end());
    validate();
  }

  void validate() const {
    if (experts.empty()) throw std::invalid_argument("Solution: empty expert set");
    for (std::size_t i = 1; i < experts.size(); ++i) {
      if (experts[i - 1] >= experts[i]) {
        throw std::invalid_argument("Solution: expert ids must be distinct");
      }
    }
    if ((experts.size() == 1) != (strategy == FusionStrategy::Identity)) {
      throw std::invalid_argument("Solution: Identity iff single expert");
    }
  }

  bool operator==(const Solution& o) const {
    return strategy == o.strategy && experts == o.experts;
  }

  std::string label() const {
    std::string s = to_string(strategy);
    s += '(';
    for (std::size_t i = 0; i < experts.size(); ++i) {
      if (i) s += '+';
      s += experts[i];
    }
    s += ')';
    return s;
  }
};

// Kappa for the inverse-squared-deviation weights, in square meters.
inline constexpr double kInvDevKappa = 1e-6;

// Pixel-wise fusion over the experts valid at each pixel; the output pixel
// is invalid only where no expert is valid. WeightedInvDev weights each
// prediction by the inverse squared deviation from the pixelwise median.
inline DepthMap fuse(const std::vector<const DepthMap*>& preds, FusionStrategy strategy) {
  if (preds.empty()) throw std::invalid_argument("fuse: empty prediction list");
  for (const DepthMap* p : preds) {
    if (!p->same_shape(*preds[0])) throw std::invalid_argument("fuse: dimension mismatch");
  }
  if (strategy == FusionStrategy::Identity) {
    if (preds.size() != 1) {
      throw std::invalid_argument("fuse: Identity requires exactly one expert");
    }
    return *preds[0];
  }

  const int w = preds[0]->width, h = preds[0]->height;
  DepthMap out(w, h);
  std::vector<double> vals(preds.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::size_t n = 0;
    for (const DepthMap* p : preds) {
      if (p->is_valid(i)) vals[n++] = p->values[i];
    }
    if (n == 0) continue;
    double fused = vals[0];
    switch (strategy) {
      case FusionStrategy::Mean: {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) sum += vals[k];
        fused = sum / static_cast<double>(n);
        break;
      }
      case FusionStrategy::Max:
        for (std::size_t k = 1; k < n; ++k) fused = std::max(fused, vals[k]);
        break;
      case FusionStrategy::Min:
        for (std::size_t k = 1; k < n; ++k) fused = std::min(fused, vals[k]);
        break;
      case FusionStrategy::WeightedInvDev: {
        std::sort(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(n));
        const double median = (n % 2 == 1)
                                  ? vals[n / 2]
                                  : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
        double wsum = 0.0, vsum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double d = vals[k] - median;
          const double wk = 1.0 / (kInvDevKappa + d * d);
          wsum += wk;
          vsum += wk * vals[k];
        }
        fused = vsum / wsum;
        break;
      }
      case FusionStrategy::Identity:
        break;  // unreachable
    }
    out.values[i] = static_cast<float>(fused);
    out.valid[i] = 1;
  }
  return out;
}

inline DepthMap fuse(const std::vector<ExpertPrediction>& preds, FusionStrategy strategy) {
  std::vector<const DepthMap*> maps;
  maps.reserve(preds.size());
  for (const auto& p : preds) maps.push_back(&p.depth);
  return fuse(maps, strategy);
}

// All singles plus every 2..max_subset expert subset under each non-Identity
// strategy, in canonical (size, lexicographic ids, strategy) order.
inline std::vector<Solution> enumerate_solutions(const ExpertPool& pool, int max_subset = 5) {
  if (max_subset < 1) throw std::invalid_argument("enumerate_solutions: max_subset < 1");
  std::vector<std::string> ids;
  ids.reserve(pool.size());
  for (const auto& e : pool) ids.push_back(e.expert_id);
  std::sort(ids.begin(), ids.end());

  std::vector<Solution> out;
  for (const auto& id : ids) out.emplace_back(std::vector<std::string>{id}, FusionStrategy::Identity);

  const int n = static_cast<int>(ids.size());
  const int cap = std::min(max_subset, n);
  for (int size = 2; size <= cap; ++size) {
    std::vector<int> pick(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) pick[static_cast<std::size_t>(i)] = i;
    for (;;) {
      std::vector<std::string> subset;
      subset.reserve(static_cast<std::size_t>(size));
      for (int i : pick) subset.push_back(ids[static_cast<std::size_t>(i)]);
      for (FusionStrategy strat : kMultiStrategies) out.emplace_back(subset, strat);
      // next combination in lexicographic order
      int i = size - 1;
      while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - size + i) --i;
      if (i < 0) break;
      ++pick[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < size; ++j) {
        pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return out;
}

inline DepthMap fuse_solution(const Solution& solution,
                              const std::vector<ExpertPrediction>& preds) {
  std::vector<const DepthMap*> maps;
  maps.reserve(solution.experts.size());
  for (const auto& id : solution.experts) {
    const DepthMap* found = nullptr;
    for (const auto& p : preds) {
      if (p.expert_id == id) {
        found = &p.depth;
        break;
      }
    }
    if (!found) throw std::invalid_argument("fuse_solution: no prediction for " + id);
    maps.push_back(found);
  }
  return fuse(maps, solution.strategy);
}

// Tie-break rank: Identity wins among singles, Mean leads among the
// multi-expert strategies.
inline int strategy_tiebreak_rank(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::Identity: return 0;
    case FusionStrategy::Mean: return 1;
    case FusionStrategy::Max: return 2;
    case FusionStrategy::Min: return 3;
    case FusionStrategy::WeightedInvDev: return 4;
  }
  return 5;
}

// True when a should be preferred over b at equal delta1.
inline bool solution_tiebreak_before(const Solution& a, const Solution& b) {
  if (a.experts.size() != b.experts.size()) return a.experts.size() < b.experts.size();
  if (a.experts != b.experts) return a.experts < b.experts;
  return strategy_tiebreak_rank(a.strategy) < strategy_tiebreak_rank(b.strategy);
}

// Index of the candidate with the best delta1 against gt; ties resolved
// deterministically via solution_tiebreak_before.
inline std::pair<int, MetricSet> best_candidate_index(
    const Sample& sample, const std::vector<Solution>& candidates,
    const std::vector<ExpertPrediction>& preds) {
  if (candidates.empty()) throw std::invalid_argument("oracle_solution: no candidates");
  int best = -1;
  MetricSet best_metrics;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const MetricSet m = compute_metrics(fuse_solution(candidates[c], preds), sample.gt);
    if (best < 0 || m.delta1 > best_metrics.delta1 ||
        (m.delta1 == best_metrics.delta1 &&
         solution_tiebreak_before(candidates[c], candidates[static_cast<std::size_t>(best)]))) {
      best = static_cast<int>(c);
      best_metrics = m;
    }
  }
  return {best, best_metrics};
}

inline std::pair<Solution, MetricSet> oracle_solution(
    const Sample& sample, const std::vector<Solution>& candidates,
    const std::vector<ExpertPrediction>& preds) {
  auto [index, metrics] = best_candidate_index(sample, candidates, preds);
  return {candidates[static_cast<std::size_t>(index)], metrics};
}

}  // namespace drl
