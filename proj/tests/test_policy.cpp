#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "drl/policy.hpp"

using namespace drl;

namespace {

struct Fixture {
  ExpertPool pool = default_pool();
  Sample sample;
  std::vector<ExpertPrediction> preds;

  explicit Fixture(CameraDomain domain = CameraDomain::Perspective,
                   std::uint64_t seed = 71) {
    SceneSpec spec;
    spec.domain = domain;
    spec.seed = seed;
    spec.width = 24;
    spec.height = 18;
    sample = generate_scene(spec);
    preds = predict_pool(pool, sample);
  }
};

PolicyParams random_policy(Rng& rng, double scale = 0.5) {
  PolicyParams p = PolicyParams::zeros();
  for (auto& w : p.W) w = scale * (uniform01(rng) * 2.0 - 1.0);
  for (auto& b : p.b) b = scale * (uniform01(rng) * 2.0 - 1.0);
  return p;
}

}  // namespace

TEST_CASE("zero policy yields a uniform distribution over legal actions") {
  PolicyParams p = PolicyParams::zeros();
  FeatureVector f{};
  std::array<std::uint8_t, kNumActions> mask{};
  mask[0] = mask[3] = mask[7] = 1;
  auto probs = action_distribution(p, f, mask);
  CHECK_THAT(probs[0], Catch::Matchers::WithinAbs(1.0 / 3, 1e-12));
  CHECK_THAT(probs[3], Catch::Matchers::WithinAbs(1.0 / 3, 1e-12));
  CHECK_THAT(probs[7], Catch::Matchers::WithinAbs(1.0 / 3, 1e-12));
  CHECK(probs[1] == 0.0);

  std::array<std::uint8_t, kNumActions> one{};
  one[5] = 1;
  CHECK(action_distribution(p, f, one)[5] == 1.0);

  std::array<std::uint8_t, kNumActions> none{};
  CHECK_THROWS_AS(action_distribution(p, f, none), std::invalid_argument);
}

TEST_CASE("softmax is invariant to a constant shift of legal logits") {
  Rng rng(5);
  PolicyParams p = random_policy(rng);
  FeatureVector f{};
  for (auto& v : f) v = uniform01(rng);
  std::array<std::uint8_t, kNumActions> mask{};
  mask[1] = mask[2] = mask[8] = 1;

  auto base = action_distribution(p, f, mask);
  PolicyParams shifted = p;
  for (int a = 0; a < kNumActions; ++a) shifted.b[static_cast<std::size_t>(a)] += 3.7;
  auto moved = action_distribution(shifted, f, mask);
  for (int a = 0; a < kNumActions; ++a) {
    CHECK_THAT(moved[static_cast<std::size_t>(a)],
               Catch::Matchers::WithinAbs(base[static_cast<std::size_t>(a)], 1e-12));
  }
}

TEST_CASE("greedy rollouts are deterministic") {
  Fixture fx;
  Rng rng(13);
  PolicyParams p = random_policy(rng);
  Rollout a = sample_rollout(p, fx.sample, fx.pool, fx.preds, RolloutMode::Greedy, nullptr);
  Rollout b = sample_rollout(p, fx.sample, fx.pool, fx.preds, RolloutMode::Greedy, nullptr);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].action == b.steps[i].action);
  }
  CHECK(a.solution == b.solution);
  CHECK(a.scene_prediction == b.scene_prediction);
}

TEST_CASE("stochastic rollouts are reproducible under a fixed seed") {
  Fixture fx;
  Rng prng(17);
  PolicyParams p = random_policy(prng);
  Rng r1(12345), r2(12345);
  Rollout a = sample_rollout(p, fx.sample, fx.pool, fx.preds, RolloutMode::Stochastic, &r1);
  Rollout b = sample_rollout(p, fx.sample, fx.pool, fx.preds, RolloutMode::Stochastic, &r2);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].action == b.steps[i].action);
    CHECK(a.steps[i].logprob == b.steps[i].logprob);
  }
  CHECK(a.solution == b.solution);

  CHECK_THROWS_AS(
      sample_rollout(p, fx.sample, fx.pool, fx.preds, RolloutMode::Stochastic, nullptr),
      std::invalid_argument);
}

TEST_CASE("every sampled rollout carries a legal solution") {
  Fixture fx(CameraDomain::Fisheye, 99);
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    PolicyParams p = random_policy(rng, 2.0);
    Rng ep(derive_seed(1000, "trial", static_cast<std::uint64_t>(trial)));
    Rollout r = sample_rollout(p, fx.sample, fx.pool, fx.preds,
                               RolloutMode::Stochastic, &ep);
    CHECK_NOTHROW(r.solution.validate());
    CHECK(r.steps.size() <= kDefaultMaxTurns - 1);
    CHECK(r.final_metrics.n_valid > 0);
    // logged probabilities match the stored distribution
    for (const auto& s : r.steps) {
      CHECK_THAT(s.logprob,
                 Catch::Matchers::WithinAbs(
                     std::log(s.probs[static_cast<std::size_t>(s.action)]), 1e-12));
    }
  }
}

TEST_CASE("score_rollout composes the four channels") {
  Fixture fx(CameraDomain::NativeErp, 123);
  PolicyParams p = PolicyParams::zeros();
  // bias the policy toward call-expert-3 (erp_a) then finalize identity
  p.b[3] = 8.0;
  p.b[9] = 4.0;
  Rollout r = sample_rollout(p, fx.sample, fx.pool, fx.preds, RolloutMode::Greedy, nullptr);
  REQUIRE(r.solution.experts == std::vector<std::string>{"erp_a"});

  ReferenceSolution ref;
  ref.solution = r.solution;
  ref.delta1 = r.final_metrics.delta1;
  ref.n_experts = 1;

  RewardConfig cfg;
  cfg.lambda = 0.2;
  cfg.tau = 3.4;
  cfg.n_max = 2;
  RewardVector rv = score_rollout(r, fx.sample, ref, cfg, fx.pool);
  CHECK(rv.r_validity == 1.0);
  CHECK(rv.r_sel == 1.0);          // erp expert on native erp
  CHECK(rv.r_em == 0.0);           // dm = 0, dn = 0
  const double cam_ok =
      fx.sample.observed_camera == CoarseCamera::ErpLike ? 0.5 : 0.0;
  const double scene_ok =
      (r.scene_prediction == 0) == (fx.sample.spec.scene == SceneType::Indoor) ? 0.5 : 0.0;
  CHECK(rv.r_scene == cam_ok + scene_ok);
}
