#include <catch2/catch_amalgamated.hpp>

#include "drl/config.hpp"

using namespace drl;

TEST_CASE("config round-trips through json") {
  RunConfig cfg;
  cfg.master_seed = 99;
  cfg.train_count_per_group = 50;
  cfg.grpo.steps = 12;
  cfg.rewards.erp_like.lambda = 0.4;
  RunConfig back = RunConfig::from_json(cfg.to_json());
  CHECK(back.master_seed == 99);
  CHECK(back.train_count_per_group == 50);
  CHECK(back.grpo.steps == 12);
  CHECK(back.rewards.erp_like.lambda == 0.4);
  CHECK(back.rewards.perspective_like.lambda == cfg.rewards.perspective_like.lambda);
}

TEST_CASE("unknown keys are rejected at every level") {
  json j = RunConfig{}.to_json();
  j["surprise"] = 1;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  j = RunConfig{}.to_json();
  j["dataset"]["surprise"] = 1;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  j = RunConfig{}.to_json();
  j["grpo"]["surprise"] = 1;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  j = RunConfig{}.to_json();
  j["rewards"]["erp_like"]["surprise"] = 1;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
}

TEST_CASE("partial configs fall back to defaults") {
  const RunConfig defaults;
  RunConfig cfg = RunConfig::from_json(json{{"master_seed", 7}});
  CHECK(cfg.master_seed == 7);
  CHECK(cfg.grpo.steps == defaults.grpo.steps);
  CHECK(cfg.dataset.width == defaults.dataset.width);
  CHECK(cfg.rewards.perspective_like.lambda == 1.0);
  CHECK(cfg.rewards.perspective_like.tau == 0.1);
  CHECK(cfg.rewards.erp_like.lambda == 0.2);
  CHECK(cfg.rewards.erp_like.tau == 3.4);
}

TEST_CASE("bad values are rejected") {
  json j = RunConfig{}.to_json();
  j["dataset"]["p_cam"] = 0.5;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  j = RunConfig{}.to_json();
  j["dataset"]["indoor_range"] = {5.0, 2.0};
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  j = RunConfig{}.to_json();
  j["grpo"]["group_size"] = 1;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  j = RunConfig{}.to_json();
  j["rewards"]["reference_policy"] = "psychic";
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  j = RunConfig{}.to_json();
  j["rewards"]["erp_like"]["tau"] = 0.0;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
}

TEST_CASE("solution json uses the documented encoding") {
  Solution s({"erp_a", "persp_b"}, FusionStrategy::WeightedInvDev);
  const json j = solution_to_json(s);
  CHECK(j.dump() == R"({"experts":["erp_a","persp_b"],"strategy":"weighted_inv_dev"})");
  CHECK(solution_from_json(j) == s);
  CHECK_THROWS_AS(solution_from_json(json{{"experts", {"a"}}, {"mode", "mean"}}),
                  ConfigError);
}

TEST_CASE("pool json round-trips and validates") {
  const ExpertPool pool = default_pool();
  const ExpertPool back = pool_from_json(pool_to_json(pool));
  REQUIRE(back.size() == pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(back[i].expert_id == pool[i].expert_id);
    CHECK(back[i].family == pool[i].family);
    CHECK(back[i].family_corr == pool[i].family_corr);
    for (std::size_t d = 0; d < 4; ++d) {
      CHECK(back[i].params[d].log_bias == pool[i].params[d].log_bias);
      CHECK(back[i].params[d].log_noise_sigma == pool[i].params[d].log_noise_sigma);
    }
  }

  json bad = pool_to_json(pool);
  bad["experts"][0]["family_corr"] = 1.5;
  CHECK_THROWS_AS(pool_from_json(bad), ConfigError);

  bad = pool_to_json(pool);
  bad["experts"][1]["domains"].erase("fisheye");
  CHECK_THROWS_AS(pool_from_json(bad), ConfigError);
}

TEST_CASE("policy json round-trips") {
  Rng rng(11);
  PolicyParams p = PolicyParams::zeros();
  for (auto& w : p.W) w = uniform(rng, -1.0, 1.0);
  for (auto& b : p.b) b = uniform(rng, -1.0, 1.0);
  const PolicyParams back = policy_from_json(policy_to_json(p));
  CHECK(back.W == p.W);
  CHECK(back.b == p.b);

  json bad = policy_to_json(p);
  bad["feature_layout_version"] = 999;
  CHECK_THROWS_AS(policy_from_json(bad), ConfigError);
}
