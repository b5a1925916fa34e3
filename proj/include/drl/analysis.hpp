#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "drl/fusion.hpp"

namespace drl {

// Everything the fusion analysis needs about one sample: the five single
// scores, the best single, and the oracle over the candidate list.
struct SampleEval {
  std::string sample_id;
  CameraDomain domain = CameraDomain::Perspective;
  std::vector<double> single_delta1;  // pool order
  int best_single = 0;                // pool index
  double best_single_delta1 = 0.0;
  ExpertFamily best_single_family = ExpertFamily::Perspective;
  Solution oracle;
  MetricSet oracle_metrics;
  double gain = 0.0;  // oracle delta1 - best single delta1
};

inline SampleEval build_sample_eval(const Sample& sample, const ExpertPool& pool,
                                    const std::vector<ExpertPrediction>& preds,
                                    const std::vector<Solution>& candidates) {
  SampleEval ev;
  ev.sample_id = sample.sample_id;
  ev.domain = sample.spec.domain;
  ev.single_delta1.resize(pool.size());
  for (std::size_t e = 0; e < pool.size(); ++e) {
    ev.single_delta1[e] = compute_metrics(preds[e].depth, sample.gt).delta1;
    if (ev.single_delta1[e] > ev.single_delta1[static_cast<std::size_t>(ev.best_single)]) {
      ev.best_single = static_cast<int>(e);
    }
  }
  ev.best_single_delta1 = ev.single_delta1[static_cast<std::size_t>(ev.best_single)];
  ev.best_single_family = pool[static_cast<std::size_t>(ev.best_single)].family;
  auto [oracle, metrics] = oracle_solution(sample, candidates, preds);
  ev.oracle = oracle;
  ev.oracle_metrics = metrics;
  ev.gain = ev.oracle_metrics.delta1 - ev.best_single_delta1;
  return ev;
}

struct GroupStats {
  std::string group;
  std::array<double, 2> best_single_family_pct{};    // [Perspective, Erp]
  std::array<double, 2> oracle_presence_pct{};       // [Perspective, Erp]
  double avg_gain_delta1 = 0.0;
  double multi_model_oracle_pct = 0.0;
  double mean_gain = 0.0;
  double p90_gain = 0.0;
  double pct_improved = 0.0;
};

// Sample Pearson correlation; undefined when either side has no variance.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("pearson: need two sequences of equal length >= 2");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw std::runtime_error("pearson: undefined correlation (zero variance)");
  }
  return sxy / std::sqrt(sxx * syy);
}

// Percentile via linear interpolation between order statistics at rank
// q*(N-1), the common convention.
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("percentile: q outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline GroupStats family_preference(const std::vector<SampleEval>& evals,
                                    const ExpertPool& pool) {
  if (evals.empty()) throw std::invalid_argument("family_preference: empty group");
  GroupStats st;
  double gain_sum = 0.0;
  std::array<std::size_t, 2> best{}, present{};
  for (const auto& ev : evals) {
    best[static_cast<std::size_t>(ev.best_single_family)]++;
    std::array<bool, 2> seen{};
    for (const auto& id : ev.oracle.experts) {
      seen[static_cast<std::size_t>(find_expert(pool, id).family)] = true;
    }
    for (std::size_t f = 0; f < 2; ++f) {
      if (seen[f]) present[f]++;
    }
    gain_sum += ev.gain;
  }
  const double n = static_cast<double>(evals.size());
  for (std::size_t f = 0; f < 2; ++f) {
    st.best_single_family_pct[f] = 100.0 * static_cast<double>(best[f]) / n;
    st.oracle_presence_pct[f] = 100.0 * static_cast<double>(present[f]) / n;
  }
  st.avg_gain_delta1 = gain_sum / n;
  return st;
}

inline GroupStats fusion_gain_stats(const std::vector<SampleEval>& evals) {
  if (evals.size() < 10) {
    throw std::invalid_argument("fusion_gain_stats: need at least 10 samples");
  }
  GroupStats st;
  std::vector<double> gains;
  gains.reserve(evals.size());
  std::size_t improved = 0, multi = 0;
  for (const auto& ev : evals) {
    gains.push_back(ev.gain);
    if (ev.gain > 0.0) ++improved;
    if (ev.oracle.experts.size() >= 2) ++multi;
  }
  const double n = static_cast<double>(evals.size());
  st.mean_gain = std::accumulate(gains.begin(), gains.end(), 0.0) / n;
  st.p90_gain = percentile(gains, 0.90);
  st.pct_improved = 100.0 * static_cast<double>(improved) / n;
  st.multi_model_oracle_pct = 100.0 * static_cast<double>(multi) / n;
  return st;
}

struct QuintileBin {
  double mean_gain = 0.0;
  double std_gain = 0.0;
  std::size_t count = 0;
};

struct QuintileStats {
  std::array<QuintileBin, 5> bins{};  // bins[0] = hardest (Q1)
  double pearson_r = 0.0;
};

// Sorts ascending by best-single delta1 (hardest first) and splits into five
// near-equal bins, remainder going to the earliest bins. Pearson r is pooled
// over the per-sample (best-single delta1, gain) pairs.
inline QuintileStats difficulty_quintiles(const std::vector<SampleEval>& evals) {
  if (evals.size() < 25) {
    throw std::invalid_argument("difficulty_quintiles: need at least 25 samples");
  }
  std::vector<const SampleEval*> order;
  order.reserve(evals.size());
  for (const auto& ev : evals) order.push_back(&ev);
  std::sort(order.begin(), order.end(), [](const SampleEval* a, const SampleEval* b) {
    if (a->best_single_delta1 != b->best_single_delta1) {
      return a->best_single_delta1 < b->best_single_delta1;
    }
    return a->sample_id < b->sample_id;
  });

  QuintileStats st;
  const std::size_t base = order.size() / 5, rem = order.size() % 5;
  std::size_t pos = 0;
  for (std::size_t q = 0; q < 5; ++q) {
    const std::size_t count = base + (q < rem ? 1 : 0);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double g = order[pos + i]->gain;
      sum += g;
      sum_sq += g * g;
    }
    QuintileBin& bin = st.bins[q];
    bin.count = count;
    bin.mean_gain = sum / static_cast<double>(count);
    bin.std_gain = std::sqrt(
        std::max(0.0, sum_sq / static_cast<double>(count) - bin.mean_gain * bin.mean_gain));
    pos += count;
  }

  std::vector<double> xs, ys;
  xs.reserve(evals.size());
  ys.reserve(evals.size());
  for (const auto& ev : evals) {
    xs.push_back(ev.best_single_delta1);
    ys.push_back(ev.gain);
  }
  st.pearson_r = pearson(xs, ys);
  return st;
}

// The ceil(frac*N) samples with the lowest best-single delta1, ties broken
// by sample_id. Returned as indices into the input order.
inline std::vector<std::size_t> hard_sample_slice(const std::vector<SampleEval>& evals,
                                                  double frac = 0.10) {
  if (evals.empty()) throw std::invalid_argument("hard_sample_slice: empty input");
  if (!(frac > 0.0) || frac > 1.0) {
    throw std::invalid_argument("hard_sample_slice: frac outside (0,1]");
  }
  std::vector<std::size_t> order(evals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (evals[a].best_single_delta1 != evals[b].best_single_delta1) {
      return evals[a].best_single_delta1 < evals[b].best_single_delta1;
    }
    return evals[a].sample_id < evals[b].sample_id;
  });
  const std::size_t k = static_cast<std::size_t>(
      std::ceil(frac * static_cast<double>(evals.size())));
  order.resize(std::min(k, order.size()));
  return order;
}

}  // namespace drl
