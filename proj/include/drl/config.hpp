#pragma once

#include <filesystem>
#include <string>

#include "drl/grpo.hpp"
#include "drl/serialize.hpp"

namespace drl {

// One JSON document drives every subcommand. Parsing is strict: unknown keys
// are rejected, missing keys fall back to the documented defaults.
struct RunConfig {
  std::uint64_t master_seed = 20260809;

  DatasetConfig dataset;          // shared shape parameters
  int train_count_per_group = 200;
  int eval_count_per_group = 200;

  std::string pool = "default";   // "default" or a pool JSON path
  int max_subset = 5;

  RewardConfigSet rewards;
  ReferencePolicy reference = ReferencePolicy::Oracle;

  GrpoConfig grpo;
  int max_turns = kDefaultMaxTurns;

  RouterTrainConfig router;

  json to_json() const {
    return json{
        {"master_seed", master_seed},
        {"dataset",
         {{"width", dataset.width},
          {"height", dataset.height},
          {"train_count_per_group", train_count_per_group},
          {"eval_count_per_group", eval_count_per_group},
          {"indoor_fraction", dataset.indoor_fraction},
          {"p_scene", dataset.noise.p_scene},
          {"p_cam", dataset.noise.p_cam},
          {"indoor_range", {dataset.indoor_min, dataset.indoor_max}},
          {"outdoor_range", {dataset.outdoor_min, dataset.outdoor_max}}}},
        {"pool", pool},
        {"fusion", {{"max_subset", max_subset}}},
        {"rewards",
         {{"reference_policy",
           reference == ReferencePolicy::Oracle ? "oracle" : "best_single"},
          {"perspective_like", reward_to_json(rewards.perspective_like)},
          {"erp_like", reward_to_json(rewards.erp_like)}}},
        {"grpo",
         {{"group_size", grpo.group_size},
          {"learning_rate", grpo.learning_rate},
          {"clip_eps", grpo.clip_eps},
          {"kl_coeff", grpo.kl_coeff},
          {"epochs_per_batch", grpo.epochs_per_batch},
          {"steps", grpo.steps},
          {"batch_samples", grpo.batch_samples},
          {"std_mode", grpo.std_mode == StdMode::Population ? "population" : "sample"},
          {"adv_eps", grpo.adv_eps}}},
        {"episode", {{"max_turns", max_turns}}},
        {"baselines",
         {{"router_hidden", router.hidden_dim},
          {"router_epochs", router.epochs},
          {"router_learning_rate", router.learning_rate}}}};
  }

  static json reward_to_json(const RewardConfig& r) {
    return json{{"lambda", r.lambda}, {"tau", r.tau}, {"n_max", r.n_max}, {"eps", r.eps}};
  }

  static RewardConfig reward_from_json(const json& j, const RewardConfig& base,
                                       const std::string& ctx) {
    require_keys(j, {"lambda", "tau", "n_max", "eps"}, ctx);
    RewardConfig r = base;
    if (j.contains("lambda")) r.lambda = j.at("lambda").get<double>();
    if (j.contains("tau")) r.tau = j.at("tau").get<double>();
    if (j.contains("n_max")) r.n_max = j.at("n_max").get<int>();
    if (j.contains("eps")) r.eps = j.at("eps").get<double>();
    try {
      r.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(ctx + ": " + e.what());
    }
    return r;
  }

  static RunConfig from_json(const json& j) {
    require_keys(j,
                 {"master_seed", "dataset", "pool", "fusion", "rewards", "grpo",
                  "episode", "baselines"},
                 "config");
    RunConfig cfg;
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();

    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      require_keys(d,
                   {"width", "height", "train_count_per_group", "eval_count_per_group",
                    "indoor_fraction", "p_scene", "p_cam", "indoor_range", "outdoor_range"},
                   "config.dataset");
      if (d.contains("width")) cfg.dataset.width = d.at("width").get<int>();
      if (d.contains("height")) cfg.dataset.height = d.at("height").get<int>();
      if (d.contains("train_count_per_group")) {
        cfg.train_count_per_group = d.at("train_count_per_group").get<int>();
      }
      if (d.contains("eval_count_per_group")) {
        cfg.eval_count_per_group = d.at("eval_count_per_group").get<int>();
      }
      if (d.contains("indoor_fraction")) {
        cfg.dataset.indoor_fraction = d.at("indoor_fraction").get<double>();
      }
      if (d.contains("p_scene")) cfg.dataset.noise.p_scene = d.at("p_scene").get<double>();
      if (d.contains("p_cam")) cfg.dataset.noise.p_cam = d.at("p_cam").get<double>();
      auto range = [](const json& arr, double& lo, double& hi, const char* name) {
        if (!arr.is_array() || arr.size() != 2) {
          throw ConfigError(std::string("config.dataset.") + name +
                            ": expected [min, max]");
        }
        lo = arr[0].get<double>();
        hi = arr[1].get<double>();
        if (!(lo > 0.0) || !(lo < hi)) {
          throw ConfigError(std::string("config.dataset.") + name + ": bad range");
        }
      };
      if (d.contains("indoor_range")) {
        range(d.at("indoor_range"), cfg.dataset.indoor_min, cfg.dataset.indoor_max,
              "indoor_range");
      }
      if (d.contains("outdoor_range")) {
        range(d.at("outdoor_range"), cfg.dataset.outdoor_min, cfg.dataset.outdoor_max,
              "outdoor_range");
      }
      if (cfg.dataset.width <= 0 || cfg.dataset.height <= 0 ||
          cfg.train_count_per_group <= 0 || cfg.eval_count_per_group <= 0) {
        throw ConfigError("config.dataset: dimensions and counts must be positive");
      }
      if (cfg.dataset.noise.p_scene < 0.0 || cfg.dataset.noise.p_scene >= 0.5 ||
          cfg.dataset.noise.p_cam < 0.0 || cfg.dataset.noise.p_cam >= 0.5) {
        throw ConfigError("config.dataset: label noise must lie in [0, 0.5)");
      }
    }

    if (j.contains("pool")) cfg.pool = j.at("pool").get<std::string>();

    if (j.contains("fusion")) {
      require_keys(j.at("fusion"), {"max_subset"}, "config.fusion");
      if (j.at("fusion").contains("max_subset")) {
        cfg.max_subset = j.at("fusion").at("max_subset").get<int>();
      }
      if (cfg.max_subset < 1) throw ConfigError("config.fusion.max_subset: must be >= 1");
    }

    if (j.contains("rewards")) {
      const json& r = j.at("rewards");
      require_keys(r, {"reference_policy", "perspective_like", "erp_like"},
                   "config.rewards");
      if (r.contains("reference_policy")) {
        const std::string ref = r.at("reference_policy").get<std::string>();
        if (ref == "oracle") {
          cfg.reference = ReferencePolicy::Oracle;
        } else if (ref == "best_single") {
          cfg.reference = ReferencePolicy::BestSingle;
        } else {
          throw ConfigError("config.rewards.reference_policy: unknown value " + ref);
        }
      }
      if (r.contains("perspective_like")) {
        cfg.rewards.perspective_like = reward_from_json(
            r.at("perspective_like"), cfg.rewards.perspective_like,
            "config.rewards.perspective_like");
      }
      if (r.contains("erp_like")) {
        cfg.rewards.erp_like = reward_from_json(r.at("erp_like"), cfg.rewards.erp_like,
                                                "config.rewards.erp_like");
      }
    }
    cfg.rewards.perspective_like.reference = cfg.reference;
    cfg.rewards.erp_like.reference = cfg.reference;

    if (j.contains("grpo")) {
      const json& g = j.at("grpo");
      require_keys(g,
                   {"group_size", "learning_rate", "clip_eps", "kl_coeff",
                    "epochs_per_batch", "steps", "batch_samples", "std_mode", "adv_eps"},
                   "config.grpo");
      if (g.contains("group_size")) cfg.grpo.group_size = g.at("group_size").get<int>();
      if (g.contains("learning_rate")) {
        cfg.grpo.learning_rate = g.at("learning_rate").get<double>();
      }
      if (g.contains("clip_eps")) cfg.grpo.clip_eps = g.at("clip_eps").get<double>();
      if (g.contains("kl_coeff")) cfg.grpo.kl_coeff = g.at("kl_coeff").get<double>();
      if (g.contains("epochs_per_batch")) {
        cfg.grpo.epochs_per_batch = g.at("epochs_per_batch").get<int>();
      }
      if (g.contains("steps")) cfg.grpo.steps = g.at("steps").get<int>();
      if (g.contains("batch_samples")) {
        cfg.grpo.batch_samples = g.at("batch_samples").get<int>();
      }
      if (g.contains("std_mode")) {
        const std::string mode = g.at("std_mode").get<std::string>();
        if (mode == "population") {
          cfg.grpo.std_mode = StdMode::Population;
        } else if (mode == "sample") {
          cfg.grpo.std_mode = StdMode::Sample;
        } else {
          throw ConfigError("config.grpo.std_mode: unknown value " + mode);
        }
      }
      if (g.contains("adv_eps")) cfg.grpo.adv_eps = g.at("adv_eps").get<double>();
      try {
        cfg.grpo.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config.grpo: ") + e.what());
      }
    }

    if (j.contains("episode")) {
      require_keys(j.at("episode"), {"max_turns"}, "config.episode");
      if (j.at("episode").contains("max_turns")) {
        cfg.max_turns = j.at("episode").at("max_turns").get<int>();
      }
      if (cfg.max_turns < 1) throw ConfigError("config.episode.max_turns: must be >= 1");
    }

    if (j.contains("baselines")) {
      const json& b = j.at("baselines");
      require_keys(b, {"router_hidden", "router_epochs", "router_learning_rate"},
                   "config.baselines");
      if (b.contains("router_hidden")) cfg.router.hidden_dim = b.at("router_hidden").get<int>();
      if (b.contains("router_epochs")) cfg.router.epochs = b.at("router_epochs").get<int>();
      if (b.contains("router_learning_rate")) {
        cfg.router.learning_rate = b.at("router_learning_rate").get<double>();
      }
      if (cfg.router.hidden_dim < 1 || cfg.router.epochs < 1) {
        throw ConfigError("config.baselines: bad router settings");
      }
    }
    return cfg;
  }

  static RunConfig load(const std::filesystem::path& path) {
    return from_json(load_json(path));
  }

  ExpertPool load_pool() const {
    if (pool == "default") return default_pool();
    return pool_from_json(load_json(pool));
  }
};

}  // namespace drl
