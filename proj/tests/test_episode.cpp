#include <catch2/catch_amalgamated.hpp>

#include "drl/episode.hpp"

using namespace drl;

namespace {

struct Fixture {
  ExpertPool pool = default_pool();
  Sample sample;
  std::vector<ExpertPrediction> preds;

  explicit Fixture(CameraDomain domain = CameraDomain::Perspective,
                   std::uint64_t seed = 51) {
    SceneSpec spec;
    spec.domain = domain;
    spec.seed = seed;
    spec.width = 24;
    spec.height = 18;
    sample = generate_scene(spec);
    preds = predict_pool(pool, sample);
  }
};

}  // namespace

TEST_CASE("reset auto-executes the camera tool") {
  Fixture fx;
  EpisodeState st = reset(fx.sample, fx.pool, fx.preds);
  CHECK(st.turn == 1);
  CHECK(st.camera_estimate == fx.sample.observed_camera);
  CHECK(st.called.empty());
  CHECK_FALSE(st.done());

  EpisodeState st2 = reset(fx.sample, fx.pool, fx.preds);
  CHECK(st2.turn == st.turn);
  CHECK(st2.camera_estimate == st.camera_estimate);
}

TEST_CASE("call-call-finalize bookkeeping") {
  Fixture fx;
  EpisodeState st = reset(fx.sample, fx.pool, fx.preds);
  step(st, Action::call(0));
  step(st, Action::call(1));
  step(st, Action::finalize(FusionStrategy::Mean));
  REQUIRE(st.done());
  CHECK(st.turn == 4);
  CHECK_FALSE(st.invalid);
  CHECK(validity_reward(st) == 1.0);
  CHECK(st.finalized->strategy == FusionStrategy::Mean);
  CHECK(st.finalized->experts ==
        std::vector<std::string>{fx.pool[0].expert_id, fx.pool[1].expert_id});
  CHECK(st.final_depth.size() == fx.sample.gt.size());
  // solution expert set equals the called set
  CHECK(st.finalized->experts.size() == st.called.size());
}

TEST_CASE("budget exhaustion forces a mean fusion with zero validity") {
  Fixture fx;
  EpisodeState st = reset(fx.sample, fx.pool, fx.preds);
  step(st, Action::call(0));
  step(st, Action::call(1));
  step(st, Action::call(2));
  step(st, Action::call(3));  // turn hits 5 = max_turns
  REQUIRE(st.done());
  CHECK(st.invalid);
  CHECK(validity_reward(st) == 0.0);
  CHECK(st.finalized->strategy == FusionStrategy::Mean);
  CHECK(st.finalized->experts.size() == 4);
}

TEST_CASE("a one-turn budget forces a single-expert identity solution") {
  Fixture fx;
  EpisodeState st = reset(fx.sample, fx.pool, fx.preds, 1);
  REQUIRE(st.done());
  CHECK(st.invalid);
  CHECK(validity_reward(st) == 0.0);
  CHECK(st.finalized->strategy == FusionStrategy::Identity);
  CHECK(st.finalized->experts == std::vector<std::string>{fx.pool[0].expert_id});
}

TEST_CASE("illegal action voids the episode and auto-finalizes") {
  Fixture fx;
  EpisodeState st = reset(fx.sample, fx.pool, fx.preds);
  step(st, Action::call(2));
  step(st, Action::call(2));  // repeat call is illegal
  REQUIRE(st.done());
  CHECK(st.invalid);
  CHECK(st.finalized->strategy == FusionStrategy::Identity);
  CHECK(validity_reward(st) == 0.0);

  EpisodeState st2 = reset(fx.sample, fx.pool, fx.preds);
  step(st2, Action::finalize(FusionStrategy::Mean));  // nothing called yet
  REQUIRE(st2.done());
  CHECK(st2.invalid);

  CHECK_THROWS_AS(step(st2, Action::call(0)), std::logic_error);
}

TEST_CASE("legal action masks") {
  Fixture fx;
  EpisodeState st = reset(fx.sample, fx.pool, fx.preds, 10);

  auto mask = legal_actions(st);
  for (int a = 0; a < 5; ++a) CHECK(mask[static_cast<std::size_t>(a)] == 1);
  for (int a = 5; a < 10; ++a) CHECK(mask[static_cast<std::size_t>(a)] == 0);

  step(st, Action::call(3));
  mask = legal_actions(st);
  CHECK(mask[3] == 0);
  CHECK(mask[0] == 1);
  CHECK(mask[9] == 1);  // Finalize(Identity)
  for (int a = 5; a < 9; ++a) CHECK(mask[static_cast<std::size_t>(a)] == 0);

  for (int e : {0, 1, 2, 4}) step(st, Action::call(e));
  mask = legal_actions(st);
  for (int a = 0; a < 5; ++a) CHECK(mask[static_cast<std::size_t>(a)] == 0);
  for (int a = 5; a < 9; ++a) CHECK(mask[static_cast<std::size_t>(a)] == 1);
  CHECK(mask[9] == 0);  // Identity needs exactly one call
}

TEST_CASE("episode length is bounded by the policy-turn budget") {
  Fixture fx;
  EpisodeState st = reset(fx.sample, fx.pool, fx.preds);
  int policy_actions = 0;
  while (!st.done()) {
    auto mask = legal_actions(st);
    int a = 0;
    while (!mask[static_cast<std::size_t>(a)]) ++a;
    step(st, Action::from_index(a));
    ++policy_actions;
  }
  CHECK(policy_actions <= kDefaultMaxTurns - 1);
  CHECK(st.turn <= kDefaultMaxTurns);
}

TEST_CASE("featurize layout") {
  Fixture fx;
  EpisodeState st = reset(fx.sample, fx.pool, fx.preds);
  FeatureVector f = featurize(st);

  const double scene_indoor = fx.sample.observed_scene == SceneType::Indoor ? 1.0 : 0.0;
  CHECK(f[0] == scene_indoor);
  CHECK(f[1] == 1.0 - scene_indoor);
  const bool persp = fx.sample.observed_camera == CoarseCamera::PerspectiveLike;
  CHECK(f[2] == (persp ? 1.0 : 0.0));
  CHECK(f[3] == (persp ? 0.0 : 1.0));
  CHECK(f[4] == 0.0);
  for (int i = 5; i < 35; ++i) CHECK(f[static_cast<std::size_t>(i)] == 0.0);
  CHECK_THAT(f[35], Catch::Matchers::WithinAbs(0.2, 1e-12));

  step(st, Action::call(1));
  FeatureVector g = featurize(st);
  CHECK(g[5] == 0.0);
  CHECK(g[6] == 1.0);
  CHECK(g[15] > 0.0);  // expert 1 aux block: mean depth / 100
  CHECK(g[19] == 1.0);  // valid fraction
  for (int i = 10; i < 15; ++i) CHECK(g[static_cast<std::size_t>(i)] == 0.0);

  // featurize is a pure function of the state
  EpisodeState st2 = reset(fx.sample, fx.pool, fx.preds);
  step(st2, Action::call(1));
  CHECK(featurize(st2) == g);

  // initial_features agrees with featurize after reset
  CHECK(initial_features(fx.sample) == f);
}
