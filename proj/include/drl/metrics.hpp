#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "drl/depth_map.hpp"

namespace drl {

// Standard depth metrics over the joint valid mask: inlier fractions at the
// 1.25^i thresholds plus absolute relative error and RMSE.
struct MetricSet {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double abs_rel = 0.0;
  double rmse = 0.0;
  std::size_t n_valid = 0;
};

// delta_i uses the symmetric ratio max(pred/gt, gt/pred) with a strict
// comparison against 1.25^i. abs_rel divides by gt only.
inline MetricSet compute_metrics(const DepthMap& pred, const DepthMap& gt) {
  if (!pred.same_shape(gt)) throw std::invalid_argument("compute_metrics: dimension mismatch");

  constexpr double kT1 = 1.25;
  constexpr double kT2 = 1.25 * 1.25;
  constexpr double kT3 = 1.25 * 1.25 * 1.25;

  std::size_t n = 0, in1 = 0, in2 = 0, in3 = 0;
  double sum_rel = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred.is_valid(i) || !gt.is_valid(i)) continue;
    const double p = pred.values[i];
    const double g = gt.values[i];
    const double ratio = p > g ? p / g : g / p;
    ++n;
    if (ratio < kT1) ++in1;
    if (ratio < kT2) ++in2;
    if (ratio < kT3) ++in3;
    sum_rel += std::abs(p - g) / g;
    sum_sq += (p - g) * (p - g);
  }
  if (n == 0) throw std::runtime_error("compute_metrics: no jointly valid pixels");

  MetricSet m;
  m.n_valid = n;
  m.delta1 = static_cast<double>(in1) / n;
  m.delta2 = static_cast<double>(in2) / n;
  m.delta3 = static_cast<double>(in3) / n;
  m.abs_rel = sum_rel / n;
  m.rmse = std::sqrt(sum_sq / n);
  return m;
}

}  // namespace drl
