#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "drl/config.hpp"
#include "drl/reporting.hpp"

namespace drl {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// gen-data: train + eval splits, rasters plus dataset manifests.

inline void run_gen_data(const RunConfig& cfg, const fs::path& out) {
  DatasetConfig train_cfg = cfg.dataset;
  train_cfg.count_per_group = cfg.train_count_per_group;
  DatasetConfig eval_cfg = cfg.dataset;
  eval_cfg.count_per_group = cfg.eval_count_per_group;

  const auto train = generate_dataset(train_cfg, cfg.master_seed, "train");
  const auto eval = generate_dataset(eval_cfg, cfg.master_seed, "eval");
  store_dataset(train, "train", cfg.master_seed, out / "data" / "train");
  store_dataset(eval, "eval", cfg.master_seed, out / "data" / "eval");
  write_command_manifest(out / "data", "gen-data", cfg.to_json(), cfg.master_seed,
                         {"train/manifest.json", "eval/manifest.json"});
}

inline PredictionProvider dataset_provider(const StoredDataset& ds, const ExpertPool& pool) {
  return [&ds, &pool](std::size_t index, const Sample&) {
    return predictions_for_entry(pool, ds.entries[index], ds.base_dir);
  };
}

// ---------------------------------------------------------------------------
// analyze: fusion analysis over the train split (the analysis protocol uses
// training samples so no test bias is introduced).

inline void run_analyze(const RunConfig& cfg, const fs::path& out) {
  require_prerequisites({out / "data" / "train" / "manifest.json"});
  const StoredDataset ds = load_dataset(out / "data" / "train");
  const ExpertPool pool = cfg.load_pool();
  const auto candidates = enumerate_solutions(pool, cfg.max_subset);
  const std::vector<Sample> samples = ds.samples();

  std::vector<SampleEval> evals(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto preds = predictions_for_entry(pool, ds.entries[i], ds.base_dir);
    evals[i] = build_sample_eval(samples[i], pool, preds, candidates);
  });

  std::vector<std::vector<std::string>> fam_rows, gain_rows, quintile_rows;
  json consolidated;
  for (CameraDomain d : kAllDomains) {
    std::vector<SampleEval> group;
    for (const auto& ev : evals) {
      if (ev.domain == d) group.push_back(ev);
    }
    if (group.empty()) continue;
    const GroupStats fam = family_preference(group, pool);
    const GroupStats gain = fusion_gain_stats(group);
    const QuintileStats q = difficulty_quintiles(group);
    const auto hard = hard_sample_slice(group, 0.10);

    fam_rows.push_back({to_string(d), fmt_double(fam.best_single_family_pct[0]),
                        fmt_double(fam.best_single_family_pct[1]),
                        fmt_double(fam.oracle_presence_pct[0]),
                        fmt_double(fam.oracle_presence_pct[1]),
                        fmt_double(fam.avg_gain_delta1)});
    gain_rows.push_back({to_string(d), fmt_double(gain.mean_gain),
                         fmt_double(gain.p90_gain), fmt_double(gain.pct_improved),
                         fmt_double(gain.multi_model_oracle_pct)});
    for (int qi = 0; qi < 5; ++qi) {
      const auto& bin = q.bins[static_cast<std::size_t>(qi)];
      quintile_rows.push_back({to_string(d), "Q" + std::to_string(qi + 1),
                               fmt_double(bin.mean_gain), fmt_double(bin.std_gain),
                               std::to_string(bin.count), fmt_double(q.pearson_r)});
    }

    json jq = json::array();
    for (const auto& bin : q.bins) {
      jq.push_back(json{{"mean_gain", bin.mean_gain},
                        {"std_gain", bin.std_gain},
                        {"count", bin.count}});
    }
    consolidated[to_string(d)] = {
        {"best_single_family_pct",
         {{"perspective", fam.best_single_family_pct[0]},
          {"erp", fam.best_single_family_pct[1]}}},
        {"oracle_presence_pct",
         {{"perspective", fam.oracle_presence_pct[0]},
          {"erp", fam.oracle_presence_pct[1]}}},
        {"avg_gain_delta1", fam.avg_gain_delta1},
        {"mean_gain", gain.mean_gain},
        {"p90_gain", gain.p90_gain},
        {"pct_improved", gain.pct_improved},
        {"multi_model_oracle_pct", gain.multi_model_oracle_pct},
        {"pearson_r", q.pearson_r},
        {"quintiles", jq},
        {"hard_slice_size", hard.size()},
        {"count", group.size()}};
  }

  const fs::path dir = out / "analysis";
  write_file_atomic(
      dir / "family_preference.csv",
      make_csv("schema: group,best_single_perspective_pct,best_single_erp_pct,"
               "oracle_presence_perspective_pct,oracle_presence_erp_pct,avg_gain_delta1",
               {"group", "best_single_perspective_pct", "best_single_erp_pct",
                "oracle_presence_perspective_pct", "oracle_presence_erp_pct",
                "avg_gain_delta1"},
               fam_rows));
  write_file_atomic(
      dir / "fusion_gain.csv",
      make_csv("schema: group,mean_gain,p90_gain,pct_improved,multi_model_oracle_pct "
               "-- per-sample delta1 gain of the oracle over the best single",
               {"group", "mean_gain", "p90_gain", "pct_improved",
                "multi_model_oracle_pct"},
               gain_rows));
  write_file_atomic(
      dir / "quintiles.csv",
      make_csv("schema: group,quintile,mean_gain,std_gain,count,pearson_r -- Q1 holds "
               "the hardest samples by best-single delta1; r is pooled per group",
               {"group", "quintile", "mean_gain", "std_gain", "count", "pearson_r"},
               quintile_rows));
  write_file_atomic(dir / "analysis.json", consolidated.dump(2) + "\n");
  write_command_manifest(dir, "analyze", cfg.to_json(), cfg.master_seed,
                         {"family_preference.csv", "fusion_gain.csv", "quintiles.csv",
                          "analysis.json"});
}

// ---------------------------------------------------------------------------
// train

inline json rollout_to_json(int step, const Rollout& r) {
  json actions = json::array();
  for (const auto& s : r.steps) actions.push_back(s.action);
  return json{{"step", step},
              {"sample_id", r.sample_id},
              {"group", to_string(r.domain)},
              {"actions", actions},
              {"scene_prediction", r.scene_prediction == 0 ? "indoor" : "outdoor"},
              {"solution", solution_to_json(r.solution)},
              {"rewards",
               {{"r_validity", r.rewards.r_validity},
                {"r_scene", r.rewards.r_scene},
                {"r_sel", r.rewards.r_sel},
                {"r_em", r.rewards.r_em}}},
              {"delta1", r.final_metrics.delta1},
              {"abs_rel", r.final_metrics.abs_rel},
              {"rmse", r.final_metrics.rmse},
              {"tool_calls", r.expert_calls},
              {"solution_size", r.solution_size()},
              {"valid", r.valid}};
}

inline void run_train(const RunConfig& cfg, const fs::path& out) {
  require_prerequisites({out / "data" / "train" / "manifest.json"});
  const StoredDataset ds = load_dataset(out / "data" / "train");
  const ExpertPool pool = cfg.load_pool();
  const std::vector<Sample> samples = ds.samples();

  SampleWorkspace ws(samples, pool, enumerate_solutions(pool, cfg.max_subset),
                     cfg.reference, dataset_provider(ds, pool));

  const fs::path dir = out / "train";
  fs::create_directories(dir);
  const fs::path rollouts_tmp = dir / "rollouts.jsonl.tmp";
  std::ofstream rollout_log(rollouts_tmp, std::ios::trunc);
  if (!rollout_log) throw std::runtime_error("cannot open " + rollouts_tmp.string());

  TrainResult result =
      train(ws, cfg.rewards, cfg.grpo, cfg.master_seed, cfg.max_turns,
            [&](int step, const Rollout& r) {
              rollout_log << rollout_to_json(step, r).dump() << '\n';
            });
  rollout_log.close();
  fs::rename(rollouts_tmp, dir / "rollouts.jsonl");

  std::vector<std::vector<std::string>> rows;
  for (const auto& row : result.log) {
    rows.push_back({std::to_string(row.step), fmt_double(row.mean_reward[0]),
                    fmt_double(row.mean_reward[1]), fmt_double(row.mean_reward[2]),
                    fmt_double(row.mean_reward[3]), fmt_double(row.mean_abs_advantage),
                    fmt_double(row.mean_delta1), fmt_double(row.mean_solution_size),
                    fmt_double(row.mean_expert_calls), fmt_double(row.entropy)});
  }
  write_file_atomic(
      dir / "trainlog.csv",
      make_csv("schema: step,r_validity,r_scene,r_sel,r_em,mean_abs_advantage,"
               "mean_delta1,mean_solution_size,mean_expert_calls,entropy -- per-step "
               "means over the G x batch rollouts",
               {"step", "r_validity", "r_scene", "r_sel", "r_em", "mean_abs_advantage",
                "mean_delta1", "mean_solution_size", "mean_expert_calls", "entropy"},
               rows));
  write_file_atomic(dir / "policy.json", policy_to_json(result.policy).dump(2) + "\n");
  write_command_manifest(dir, "train", cfg.to_json(), cfg.master_seed,
                         {"policy.json", "trainlog.csv", "rollouts.jsonl"});
}

// ---------------------------------------------------------------------------
// eval: greedy rollouts of the trained policy over the eval split.

inline void run_eval(const RunConfig& cfg, const fs::path& out) {
  require_prerequisites(
      {out / "data" / "eval" / "manifest.json", out / "train" / "policy.json"});
  const StoredDataset ds = load_dataset(out / "data" / "eval");
  const ExpertPool pool = cfg.load_pool();
  const PolicyParams policy = policy_from_json(load_json(out / "train" / "policy.json"));
  const std::vector<Sample> samples = ds.samples();

  const EvalResult result =
      evaluate(policy, samples, pool, cfg.max_turns, dataset_provider(ds, pool));

  std::vector<MethodSampleRecord> records;
  records.reserve(result.records.size());
  for (const auto& rec : result.records) {
    MethodSampleRecord r;
    r.method = "policy";
    r.sample_id = rec.sample_id;
    r.domain = rec.domain;
    r.metrics = rec.metrics;
    r.n_experts = static_cast<int>(rec.solution.experts.size());
    r.solution = rec.solution;
    records.push_back(std::move(r));
  }

  const fs::path dir = out / "eval";
  write_file_atomic(dir / "eval.csv",
                    make_csv(kMetricCsvDoc, kMetricCsvHeader,
                             method_group_rows(records, {"policy"})));
  write_file_atomic(dir / "eval_samples.jsonl", records_to_jsonl(records));

  json per_group;
  double overall_delta1 = 0.0;
  int n_groups = 0;
  json freq;
  for (CameraDomain d : kAllDomains) {
    std::vector<const MethodSampleRecord*> subset;
    for (const auto& r : records) {
      if (r.domain == d) subset.push_back(&r);
    }
    if (subset.empty()) continue;
    const MethodGroupMean m = aggregate(subset);
    per_group[to_string(d)] = {{"delta1", m.delta1},
                               {"abs_rel", m.abs_rel},
                               {"rmse", m.rmse},
                               {"n_mean", m.n_mean},
                               {"count", m.count}};
    overall_delta1 += m.delta1;
    ++n_groups;
    json jf = json::array();
    for (const auto& [label, count] : solution_frequency(result.records, d)) {
      jf.push_back(json::array({label, count}));
    }
    freq[to_string(d)] = jf;
  }

  json summary{{"per_group", per_group},
               {"overall_delta1", n_groups ? overall_delta1 / n_groups : 0.0},
               {"n_mean", result.mean_solution_size},
               {"solution_freq", freq},
               {"rewards",
                {{"perspective_like", RunConfig::reward_to_json(cfg.rewards.perspective_like)},
                 {"erp_like", RunConfig::reward_to_json(cfg.rewards.erp_like)}}},
               {"config_hash", config_hash(cfg.to_json())}};
  write_file_atomic(dir / "eval_summary.json", summary.dump(2) + "\n");
  write_command_manifest(dir, "eval", cfg.to_json(), cfg.master_seed,
                         {"eval.csv", "eval_samples.jsonl", "eval_summary.json"});
}

// ---------------------------------------------------------------------------
// baselines: experts, fixed full-pool fusions, random strategies, the
// feed-forward router and the per-sample oracle upper bound, all on the eval
// split with the metric CSV schema of eval.

inline void run_baselines(const RunConfig& cfg, const fs::path& out) {
  require_prerequisites({out / "data" / "train" / "manifest.json",
                         out / "data" / "eval" / "manifest.json"});
  const StoredDataset train_ds = load_dataset(out / "data" / "train");
  const StoredDataset eval_ds = load_dataset(out / "data" / "eval");
  const ExpertPool pool = cfg.load_pool();
  const auto candidates = enumerate_solutions(pool, cfg.max_subset);

  // Router training set: initial-state features, oracle indices as labels.
  const std::vector<Sample> train_samples = train_ds.samples();
  std::vector<FeatureVector> xs(train_samples.size());
  std::vector<int> ys(train_samples.size());
  parallel_for(train_samples.size(), [&](std::size_t i) {
    const auto preds = predictions_for_entry(pool, train_ds.entries[i], train_ds.base_dir);
    xs[i] = initial_features(train_samples[i], cfg.max_turns);
    ys[i] = best_candidate_index(train_samples[i], candidates, preds).first;
  });
  RouterTrainConfig router_cfg = cfg.router;
  router_cfg.seed = derive_seed(cfg.master_seed, "baseline");
  const RouterParams router =
      train_router(xs, ys, static_cast<int>(candidates.size()), router_cfg);

  const std::vector<Sample> eval_samples = eval_ds.samples();
  std::vector<std::vector<MethodSampleRecord>> per_sample(eval_samples.size());
  const std::uint64_t baseline_seed = derive_seed(cfg.master_seed, "baseline");

  parallel_for(eval_samples.size(), [&](std::size_t i) {
    const Sample& s = eval_samples[i];
    const auto preds = predictions_for_entry(pool, eval_ds.entries[i], eval_ds.base_dir);
    auto add = [&](const std::string& method, const Solution& sol) {
      MethodSampleRecord r;
      r.method = method;
      r.sample_id = s.sample_id;
      r.domain = s.spec.domain;
      r.solution = sol;
      r.n_experts = static_cast<int>(sol.experts.size());
      r.metrics = compute_metrics(fuse_solution(sol, preds), s.gt);
      per_sample[i].push_back(std::move(r));
    };

    for (const auto& e : pool) {
      add("expert:" + e.expert_id, Solution({e.expert_id}, FusionStrategy::Identity));
    }
    std::vector<std::string> all_ids;
    for (const auto& e : pool) all_ids.push_back(e.expert_id);
    for (FusionStrategy strat : kMultiStrategies) {
      add(std::string("fusion:") + to_string(strat) + "_all", Solution(all_ids, strat));
    }
    Rng rm_rng(derive_seed(baseline_seed, "rand-model", i));
    add("rand_model", rand_model(s.spec.domain, pool, rm_rng));
    Rng rs_rng(derive_seed(baseline_seed, "rand-sol", i));
    add("rand_sol", rand_sol(s.spec.domain, candidates, pool, rs_rng));
    add("router", route(router, candidates, initial_features(s, cfg.max_turns)));
    auto [oracle_idx, oracle_metrics] = best_candidate_index(s, candidates, preds);
    MethodSampleRecord oracle;
    oracle.method = "oracle";
    oracle.sample_id = s.sample_id;
    oracle.domain = s.spec.domain;
    oracle.solution = candidates[static_cast<std::size_t>(oracle_idx)];
    oracle.n_experts = static_cast<int>(oracle.solution.experts.size());
    oracle.metrics = oracle_metrics;
    per_sample[i].push_back(std::move(oracle));
  });

  std::vector<MethodSampleRecord> records;
  for (auto& batch : per_sample) {
    for (auto& r : batch) records.push_back(std::move(r));
  }

  std::vector<std::string> order;
  for (const auto& e : pool) order.push_back("expert:" + e.expert_id);
  for (FusionStrategy strat : kMultiStrategies) {
    order.push_back(std::string("fusion:") + to_string(strat) + "_all");
  }
  order.insert(order.end(), {"rand_model", "rand_sol", "router", "oracle"});

  const fs::path dir = out / "baselines";
  write_file_atomic(dir / "baselines.csv",
                    make_csv(kMetricCsvDoc, kMetricCsvHeader,
                             method_group_rows(records, order)));
  write_file_atomic(dir / "baselines_samples.jsonl", records_to_jsonl(records));
  write_file_atomic(dir / "router.json", router_to_json(router).dump(2) + "\n");
  write_command_manifest(dir, "baselines", cfg.to_json(), cfg.master_seed,
                         {"baselines.csv", "baselines_samples.jsonl", "router.json"});
}

// ---------------------------------------------------------------------------
// report: consolidated comparison over policy + baselines, the hard-sample
// slice, solution frequencies and (when sweep runs exist) the ablation table.

inline void run_report(const RunConfig& cfg, const fs::path& out) {
  require_prerequisites({out / "eval" / "eval_samples.jsonl",
                         out / "eval" / "eval_summary.json",
                         out / "baselines" / "baselines_samples.jsonl"});
  std::vector<MethodSampleRecord> records =
      records_from_jsonl(out / "eval" / "eval_samples.jsonl");
  {
    auto baseline_records = records_from_jsonl(out / "baselines" / "baselines_samples.jsonl");
    records.insert(records.end(), baseline_records.begin(), baseline_records.end());
  }

  std::vector<std::string> order = {"policy"};
  for (const auto& m : method_order_of(records)) {
    if (m != "policy") order.push_back(m);
  }

  const fs::path dir = out / "report";
  write_file_atomic(dir / "comparison.csv",
                    make_csv(kMetricCsvDoc, kMetricCsvHeader,
                             method_group_rows(records, order)));

  // Hard slice: worst 10% per group by best-single per-sample delta1.
  std::vector<MethodSampleRecord> hard_records;
  for (CameraDomain d : kAllDomains) {
    std::map<std::string, double> best_single;  // sample_id -> best single delta1
    for (const auto& r : records) {
      if (r.domain != d || r.method.rfind("expert:", 0) != 0) continue;
      auto [it, inserted] = best_single.try_emplace(r.sample_id, r.metrics.delta1);
      if (!inserted) it->second = std::max(it->second, r.metrics.delta1);
    }
    if (best_single.empty()) continue;
    std::vector<std::pair<std::string, double>> ranked(best_single.begin(),
                                                       best_single.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second < b.second;
      return a.first < b.first;
    });
    const std::size_t k = static_cast<std::size_t>(
        std::ceil(0.10 * static_cast<double>(ranked.size())));
    std::set<std::string> slice;
    for (std::size_t i = 0; i < k; ++i) slice.insert(ranked[i].first);
    for (const auto& r : records) {
      if (r.domain == d && slice.count(r.sample_id)) hard_records.push_back(r);
    }
  }
  write_file_atomic(dir / "hard_samples.csv",
                    make_csv("schema: method,group,delta1,abs_rel,rmse,n_mean -- means "
                             "over the worst-10% slice ranked by best-single delta1",
                             kMetricCsvHeader, method_group_rows(hard_records, order)));

  // Solution frequency table from the eval summary.
  const json summary = load_json(out / "eval" / "eval_summary.json");
  std::vector<std::vector<std::string>> freq_rows;
  for (CameraDomain d : kAllDomains) {
    if (!summary.at("solution_freq").contains(to_string(d))) continue;
    const json& jf = summary.at("solution_freq").at(to_string(d));
    double total = 0.0;
    for (const auto& item : jf) total += item[1].get<double>();
    for (const auto& item : jf) {
      freq_rows.push_back({to_string(d), item[0].get<std::string>(),
                           std::to_string(item[1].get<std::size_t>()),
                           fmt_double(total > 0 ? item[1].get<double>() / total : 0.0)});
    }
  }
  write_file_atomic(dir / "solution_freq.csv",
                    make_csv("schema: group,solution,count,fraction -- greedy-policy "
                             "solution choices per group on the eval split",
                             {"group", "solution", "count", "fraction"}, freq_rows));

  std::vector<std::string> outputs = {"comparison.csv", "hard_samples.csv",
                                      "solution_freq.csv"};

  // Ablation table over sweep subruns, when present.
  const fs::path ablation_root = out / "ablation";
  if (fs::exists(ablation_root)) {
    std::vector<fs::path> runs;
    for (const auto& entry : fs::directory_iterator(ablation_root)) {
      if (entry.is_directory() &&
          fs::exists(entry.path() / "eval" / "eval_summary.json")) {
        runs.push_back(entry.path());
      }
    }
    std::sort(runs.begin(), runs.end());
    std::vector<std::vector<std::string>> rows;
    for (const auto& run : runs) {
      const json s = load_json(run / "eval" / "eval_summary.json");
      const json& erp = s.at("rewards").at("erp_like");
      rows.push_back({run.filename().string(), fmt_double(erp.at("lambda").get<double>()),
                      fmt_double(erp.at("tau").get<double>()),
                      fmt_double(erp.at("n_max").get<double>()),
                      fmt_double(s.at("overall_delta1").get<double>()),
                      fmt_double(s.at("n_mean").get<double>())});
    }
    if (!rows.empty()) {
      write_file_atomic(dir / "ablation.csv",
                        make_csv("schema: run,lambda,tau,n_max,delta1,n_mean -- "
                                 "efficiency-reward sweep (lambda/tau/n_max applied to "
                                 "both domain families)",
                                 {"run", "lambda", "tau", "n_max", "delta1", "n_mean"},
                                 rows));
      outputs.push_back("ablation.csv");
    }
  }
  write_command_manifest(dir, "report", cfg.to_json(), cfg.master_seed, outputs);
}

}  // namespace drl
