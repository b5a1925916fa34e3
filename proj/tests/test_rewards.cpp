#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drl/rewards.hpp"
#include "drl/rng.hpp"

using namespace drl;

TEST_CASE("scene reward averages the two label accuracies") {
  const auto perspective = CameraDomain::Perspective;
  CHECK(scene_reward(SceneType::Indoor, CoarseCamera::PerspectiveLike,
                     SceneType::Indoor, perspective) == 1.0);
  CHECK(scene_reward(SceneType::Indoor, CoarseCamera::ErpLike,
                     SceneType::Indoor, perspective) == 0.5);
  CHECK(scene_reward(SceneType::Outdoor, CoarseCamera::ErpLike,
                     SceneType::Indoor, perspective) == 0.0);
  // unknown tokens earn no credit for that label
  CHECK(scene_reward(std::nullopt, CoarseCamera::PerspectiveLike,
                     SceneType::Indoor, perspective) == 0.5);
  CHECK(scene_reward(SceneType::Indoor, std::nullopt, SceneType::Indoor,
                     perspective) == 0.5);
  // erp variant counts as perspective-like truth
  CHECK(scene_reward(SceneType::Indoor, CoarseCamera::PerspectiveLike,
                     SceneType::Indoor, CameraDomain::ErpVariant) == 1.0);
}

TEST_CASE("selection prior rewards a domain-matching expert") {
  ExpertPool pool = default_pool();
  Solution erp_single({"erp_a"}, FusionStrategy::Identity);
  Solution persp_pair({"persp_a", "persp_b"}, FusionStrategy::Mean);
  Solution mixed({"erp_b", "persp_a"}, FusionStrategy::Mean);

  CHECK(selection_prior_reward(erp_single, CameraDomain::NativeErp, pool) == 1.0);
  CHECK(selection_prior_reward(persp_pair, CameraDomain::NativeErp, pool) == 0.0);
  CHECK(selection_prior_reward(persp_pair, CameraDomain::Perspective, pool) == 1.0);
  CHECK(selection_prior_reward(persp_pair, CameraDomain::ErpVariant, pool) == 1.0);
  for (CameraDomain d : kAllDomains) {
    CHECK(selection_prior_reward(mixed, d, pool) == 1.0);
  }
}

TEST_CASE("efficiency reward trivial cases") {
  RewardConfig cfg;
  cfg.lambda = 0.2;
  cfg.tau = 3.4;
  cfg.n_max = 2;
  CHECK(efficiency_metric_reward(0.8, 0.8, 2, 2, cfg) == 0.0);
  // equal metric, one extra call: -lambda * dn * exp(0)
  CHECK_THAT(efficiency_metric_reward(0.8, 0.8, 3, 1, cfg),
             Catch::Matchers::WithinAbs(-0.2 * (2.0 / 2.0), 1e-15));
}

TEST_CASE("efficiency reward worked example") {
  // lambda=0.2, tau=3.4, n_max=2, m=0.85 vs 0.80, n=2 vs 1
  RewardConfig cfg;
  cfg.lambda = 0.2;
  cfg.tau = 3.4;
  cfg.n_max = 2;
  cfg.eps = 1e-8;
  const double r = efficiency_metric_reward(0.85, 0.80, 2, 1, cfg);
  CHECK_THAT(r, Catch::Matchers::WithinAbs(-0.035679, 1e-6));
}

TEST_CASE("efficiency reward equals the metric gap when the penalty vanishes") {
  RewardConfig cfg;
  cfg.lambda = 0.0;
  cfg.tau = 1.0;
  cfg.n_max = 4;
  const double dm = (0.9 - 0.7) / (0.7 + cfg.eps);
  CHECK(efficiency_metric_reward(0.9, 0.7, 4, 1, cfg) == dm);

  cfg.lambda = 0.7;
  CHECK(efficiency_metric_reward(0.9, 0.7, 3, 3, cfg) == dm);
}

TEST_CASE("efficiency reward is strictly decreasing in n_i and penalty-bounded") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    RewardConfig cfg;
    cfg.lambda = uniform(rng, 0.01, 2.0);
    cfg.tau = uniform(rng, 0.05, 5.0);
    cfg.n_max = 1 + static_cast<int>(uniform_index(rng, 5));
    const double m_i = uniform(rng, 0.0, 1.0);
    const double m_ref = uniform(rng, 0.05, 1.0);
    const int n_ref = 1 + static_cast<int>(uniform_index(rng, 5));

    double prev = efficiency_metric_reward(m_i, m_ref, 1, n_ref, cfg);
    for (int n_i = 2; n_i <= 5; ++n_i) {
      const double cur = efficiency_metric_reward(m_i, m_ref, n_i, n_ref, cfg);
      CHECK(cur < prev);
      prev = cur;
    }

    const int n_i = 1 + static_cast<int>(uniform_index(rng, 5));
    const double dm = (m_i - m_ref) / (std::abs(m_ref) + cfg.eps);
    const double dn = static_cast<double>(n_i - n_ref) / cfg.n_max;
    const double r = efficiency_metric_reward(m_i, m_ref, n_i, n_ref, cfg);
    CHECK(std::abs(r - dm) <= cfg.lambda * std::abs(dn) + 1e-15);
  }
}

TEST_CASE("efficiency penalty magnitude shrinks as the metric gap grows") {
  RewardConfig cfg;
  cfg.lambda = 1.0;
  cfg.tau = 0.5;
  cfg.n_max = 2;
  // same extra call, growing |dm|: |R - dm| must be non-increasing
  double prev_pen = 1e9;
  for (double m_i : {0.80, 0.85, 0.95, 1.10, 1.40}) {
    const double dm = (m_i - 0.8) / (0.8 + cfg.eps);
    const double pen = std::abs(efficiency_metric_reward(m_i, 0.8, 2, 1, cfg) - dm);
    CHECK(pen <= prev_pen + 1e-15);
    prev_pen = pen;
  }
}

TEST_CASE("reward config validation") {
  RewardConfig bad;
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = RewardConfig{};
  bad.eps = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = RewardConfig{};
  bad.lambda = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = RewardConfig{};
  bad.n_max = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

// Independent high-precision oracle for the efficiency reward, evaluated in
// long double with its own formula expression.
namespace {
long double efficiency_reward_hp(long double m_i, long double m_ref, long double n_i,
                                 long double n_ref, long double lambda,
                                 long double tau, long double n_max,
                                 long double eps) {
  const long double dm = (m_i - m_ref) / (fabsl(m_ref) + eps);
  const long double dn = (n_i - n_ref) / n_max;
  return dm - lambda * dn * expl(-fabsl(dm) / tau);
}
}  // namespace

TEST_CASE("efficiency reward matches a high-precision oracle") {
  Rng rng(2024);
  int tested = 0;
  double worst = 0.0;
  while (tested < 1000) {
    RewardConfig cfg;
    cfg.lambda = uniform(rng, 0.0, 2.0);
    cfg.tau = uniform(rng, 0.05, 5.0);
    cfg.n_max = 1 + static_cast<int>(uniform_index(rng, 5));
    const double m_i = uniform(rng, 0.0, 1.0);
    const double m_ref = uniform(rng, 0.01, 1.0);
    const int n_i = 1 + static_cast<int>(uniform_index(rng, 5));
    const int n_ref = 1 + static_cast<int>(uniform_index(rng, 5));

    const long double hp = efficiency_reward_hp(m_i, m_ref, n_i, n_ref, cfg.lambda,
                                                cfg.tau, cfg.n_max, cfg.eps);
    const double dm = (m_i - m_ref) / (std::abs(m_ref) + cfg.eps);
    // near-perfect cancellation makes the relative error ill-conditioned;
    // those measure-zero tuples are redrawn
    if (fabsl(hp) < 1e-3L * std::max(1.0, std::abs(dm))) continue;
    const double got = efficiency_metric_reward(m_i, m_ref, n_i, n_ref, cfg);
    worst = std::max(worst, static_cast<double>(fabsl(got - hp) / fabsl(hp)));
    ++tested;
  }
  CHECK(worst < 1e-12);
}
