#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "drl/episode.hpp"
#include "drl/fusion.hpp"
#include "drl/rng.hpp"

namespace drl {

// Random baselines are domain-restricted the way the evaluation protocol
// restricts them: perspective-like groups draw among perspective experts,
// erp-like groups among ERP experts. The restriction is keyed to the true
// domain of the sample's group.
inline ExpertFamily restricted_family(CameraDomain domain) {
  return coarse_camera(domain) == CoarseCamera::PerspectiveLike
             ? ExpertFamily::Perspective
             : ExpertFamily::Erp;
}

inline Solution rand_model(CameraDomain domain, const ExpertPool& pool, Rng& rng) {
  if (pool.empty()) throw std::invalid_argument("rand_model: empty pool");
  const ExpertFamily fam = restricted_family(domain);
  std::vector<const ExpertProfile*> eligible;
  for (const auto& e : pool) {
    if (e.family == fam) eligible.push_back(&e);
  }
  if (eligible.empty()) throw std::invalid_argument("rand_model: no expert of required family");
  const auto pick = uniform_index(rng, eligible.size());
  return Solution({eligible[pick]->expert_id}, FusionStrategy::Identity);
}

inline Solution rand_sol(CameraDomain domain, const std::vector<Solution>& candidates,
                         const ExpertPool& pool, Rng& rng) {
  if (candidates.empty()) throw std::invalid_argument("rand_sol: empty candidate list");
  const ExpertFamily fam = restricted_family(domain);
  std::vector<const Solution*> eligible;
  for (const auto& c : candidates) {
    bool all_match = true;
    for (const auto& id : c.experts) {
      if (find_expert(pool, id).family != fam) {
        all_match = false;
        break;
      }
    }
    if (all_match) eligible.push_back(&c);
  }
  if (eligible.empty()) throw std::invalid_argument("rand_sol: no eligible candidate");
  return *eligible[uniform_index(rng, eligible.size())];
}

// Feed-forward router baseline: initial-state features -> one tanh hidden
// layer -> softmax over the enumerated solution list, trained by
// cross-entropy against per-sample oracle labels.
struct RouterParams {
  int input_dim = kFeatureDim;
  int hidden_dim = 64;
  int output_dim = 0;
  std::vector<double> W1, b1;  // hidden x input, hidden
  std::vector<double> W2, b2;  // output x hidden, output

  static RouterParams init(int output_dim, Rng& rng, int hidden_dim = 64) {
    RouterParams p;
    p.hidden_dim = hidden_dim;
    p.output_dim = output_dim;
    p.W1.resize(static_cast<std::size_t>(hidden_dim) * kFeatureDim);
    p.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    p.W2.resize(static_cast<std::size_t>(output_dim) * hidden_dim);
    p.b2.assign(static_cast<std::size_t>(output_dim), 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(kFeatureDim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    for (auto& w : p.W1) w = s1 * (uniform01(rng) * 2.0 - 1.0);
    for (auto& w : p.W2) w = s2 * (uniform01(rng) * 2.0 - 1.0);
    return p;
  }

  std::size_t n_params() const {
    return W1.size() + b1.size() + W2.size() + b2.size();
  }
};

inline std::vector<double> router_logits(const RouterParams& p, const FeatureVector& x) {
  std::vector<double> h(static_cast<std::size_t>(p.hidden_dim));
  for (int i = 0; i < p.hidden_dim; ++i) {
    double z = p.b1[static_cast<std::size_t>(i)];
    const double* w = &p.W1[static_cast<std::size_t>(i) * kFeatureDim];
    for (int j = 0; j < p.input_dim; ++j) z += w[j] * x[static_cast<std::size_t>(j)];
    h[static_cast<std::size_t>(i)] = std::tanh(z);
  }
  std::vector<double> z(static_cast<std::size_t>(p.output_dim));
  for (int k = 0; k < p.output_dim; ++k) {
    double v = p.b2[static_cast<std::size_t>(k)];
    const double* w = &p.W2[static_cast<std::size_t>(k) * p.hidden_dim];
    for (int i = 0; i < p.hidden_dim; ++i) v += w[i] * h[static_cast<std::size_t>(i)];
    z[static_cast<std::size_t>(k)] = v;
  }
  return z;
}

// Mean cross-entropy over the batch; when grad is non-null it receives the
// exact analytic gradient (same shapes as the parameters).
inline double router_loss(const RouterParams& p, const std::vector<FeatureVector>& xs,
                          const std::vector<int>& ys, RouterParams* grad) {
  if (xs.size() != ys.size() || xs.empty()) {
    throw std::invalid_argument("router_loss: bad batch");
  }
  if (grad) {
    grad->hidden_dim = p.hidden_dim;
    grad->output_dim = p.output_dim;
    grad->W1.assign(p.W1.size(), 0.0);
    grad->b1.assign(p.b1.size(), 0.0);
    grad->W2.assign(p.W2.size(), 0.0);
    grad->b2.assign(p.b2.size(), 0.0);
  }
  const double inv_n = 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;

  std::vector<double> h(static_cast<std::size_t>(p.hidden_dim));
  std::vector<double> probs(static_cast<std::size_t>(p.output_dim));
  std::vector<double> dh(static_cast<std::size_t>(p.hidden_dim));

  for (std::size_t n = 0; n < xs.size(); ++n) {
    const FeatureVector& x = xs[n];
    for (int i = 0; i < p.hidden_dim; ++i) {
      double z = p.b1[static_cast<std::size_t>(i)];
      const double* w = &p.W1[static_cast<std::size_t>(i) * kFeatureDim];
      for (int j = 0; j < p.input_dim; ++j) z += w[j] * x[static_cast<std::size_t>(j)];
      h[static_cast<std::size_t>(i)] = std::tanh(z);
    }
    double zmax = -1e300;
    for (int k = 0; k < p.output_dim; ++k) {
      double v = p.b2[static_cast<std::size_t>(k)];
      const double* w = &p.W2[static_cast<std::size_t>(k) * p.hidden_dim];
      for (int i = 0; i < p.hidden_dim; ++i) v += w[i] * h[static_cast<std::size_t>(i)];
      probs[static_cast<std::size_t>(k)] = v;
      zmax = std::max(zmax, v);
    }
    double sum = 0.0;
    for (auto& v : probs) {
      v = std::exp(v - zmax);
      sum += v;
    }
    for (auto& v : probs) v /= sum;

    const int y = ys[n];
    if (y < 0 || y >= p.output_dim) throw std::invalid_argument("router_loss: bad label");
    loss -= inv_n * std::log(std::max(probs[static_cast<std::size_t>(y)], 1e-300));

    if (!grad) continue;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (int k = 0; k < p.output_dim; ++k) {
      const double dz = inv_n * (probs[static_cast<std::size_t>(k)] - (k == y ? 1.0 : 0.0));
      if (dz == 0.0) continue;
      double* wrow = &grad->W2[static_cast<std::size_t>(k) * p.hidden_dim];
      const double* w = &p.W2[static_cast<std::size_t>(k) * p.hidden_dim];
      for (int i = 0; i < p.hidden_dim; ++i) {
        wrow[i] += dz * h[static_cast<std::size_t>(i)];
        dh[static_cast<std::size_t>(i)] += dz * w[i];
      }
      grad->b2[static_cast<std::size_t>(k)] += dz;
    }
    for (int i = 0; i < p.hidden_dim; ++i) {
      const double da =
          dh[static_cast<std::size_t>(i)] *
          (1.0 - h[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)]);
      if (da == 0.0) continue;
      double* wrow = &grad->W1[static_cast<std::size_t>(i) * kFeatureDim];
      for (int j = 0; j < p.input_dim; ++j) {
        wrow[j] += da * x[static_cast<std::size_t>(j)];
      }
      grad->b1[static_cast<std::size_t>(i)] += da;
    }
  }
  return loss;
}

struct RouterTrainConfig {
  double learning_rate = 0.01;
  int epochs = 200;
  int hidden_dim = 64;
  std::uint64_t seed = 0;
};

// Plain full-batch gradient descent; aborts on a non-finite loss.
inline RouterParams train_router(const std::vector<FeatureVector>& xs,
                                 const std::vector<int>& ys, int output_dim,
                                 const RouterTrainConfig& cfg,
                                 std::vector<double>* loss_history = nullptr) {
  Rng rng(derive_seed(cfg.seed, "router-init"));
  RouterParams p = RouterParams::init(output_dim, rng, cfg.hidden_dim);
  RouterParams grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double loss = router_loss(p, xs, ys, &grad);
    if (!std::isfinite(loss)) throw std::runtime_error("train_router: non-finite loss");
    if (loss_history) loss_history->push_back(loss);
    for (std::size_t i = 0; i < p.W1.size(); ++i) p.W1[i] -= cfg.learning_rate * grad.W1[i];
    for (std::size_t i = 0; i < p.b1.size(); ++i) p.b1[i] -= cfg.learning_rate * grad.b1[i];
    for (std::size_t i = 0; i < p.W2.size(); ++i) p.W2[i] -= cfg.learning_rate * grad.W2[i];
    for (std::size_t i = 0; i < p.b2.size(); ++i) p.b2[i] -= cfg.learning_rate * grad.b2[i];
  }
  return p;
}

inline int route_index(const RouterParams& p, const FeatureVector& x) {
  const std::vector<double> z = router_logits(p, x);
  int best = 0;
  for (int k = 1; k < p.output_dim; ++k) {
    if (z[static_cast<std::size_t>(k)] > z[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

inline Solution route(const RouterParams& p, const std::vector<Solution>& candidates,
                      const FeatureVector& x) {
  return candidates[static_cast<std::size_t>(route_index(p, x))];
}

}  // namespace drl
