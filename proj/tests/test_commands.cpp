#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "drl/commands.hpp"

using namespace drl;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.master_seed = 4242;
  cfg.dataset.width = 16;
  cfg.dataset.height = 12;
  cfg.train_count_per_group = 25;  // difficulty_quintiles needs >= 25 per group
  cfg.eval_count_per_group = 8;
  cfg.grpo.steps = 4;
  cfg.grpo.group_size = 4;
  cfg.grpo.batch_samples = 2;
  cfg.router.epochs = 25;
  cfg.router.hidden_dim = 16;
  return cfg;
}

fs::path fresh_dir(const char* name) {
  fs::path dir = fs::temp_directory_path() / "drl_cmd_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++n;
  }
  return n;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool seen_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {  // column header row
      seen_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
      if (c == ',') {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("full command pipeline on a tiny run") {
  const RunConfig cfg = tiny_config();
  const fs::path out = fresh_dir("pipeline");

  run_gen_data(cfg, out);
  REQUIRE(fs::exists(out / "data" / "train" / "manifest.json"));
  REQUIRE(fs::exists(out / "data" / "eval" / "manifest.json"));
  REQUIRE(fs::exists(out / "data" / "manifest.json"));
  CHECK(count_lines(out / "data" / "train" / "manifest.json") > 0);

  // dataset loads back with bit-identical rasters
  const StoredDataset ds = load_dataset(out / "data" / "train");
  CHECK(ds.entries.size() == 4 * 25);
  DatasetConfig dcfg = cfg.dataset;
  dcfg.count_per_group = cfg.train_count_per_group;
  const auto regen = generate_dataset(dcfg, cfg.master_seed, "train");
  REQUIRE(regen.size() == ds.entries.size());
  for (std::size_t i = 0; i < regen.size(); ++i) {
    CHECK(regen[i].sample_id == ds.entries[i].sample.sample_id);
    CHECK(regen[i].gt.values == ds.entries[i].sample.gt.values);
    CHECK(regen[i].observed_scene == ds.entries[i].sample.observed_scene);
  }

  run_analyze(cfg, out);
  for (const char* f : {"family_preference.csv", "fusion_gain.csv", "quintiles.csv",
                        "analysis.json", "manifest.json"}) {
    CHECK(fs::exists(out / "analysis" / f));
  }
  CHECK(read_csv_rows(out / "analysis" / "family_preference.csv").size() == 4);
  CHECK(read_csv_rows(out / "analysis" / "quintiles.csv").size() == 20);

  run_train(cfg, out);
  REQUIRE(fs::exists(out / "train" / "policy.json"));
  CHECK(read_csv_rows(out / "train" / "trainlog.csv").size() == 4);
  CHECK(count_lines(out / "train" / "rollouts.jsonl") ==
        static_cast<std::size_t>(cfg.grpo.steps * cfg.grpo.batch_samples *
                                 cfg.grpo.group_size));

  run_eval(cfg, out);
  REQUIRE(fs::exists(out / "eval" / "eval_summary.json"));
  CHECK(count_lines(out / "eval" / "eval_samples.jsonl") == 4 * 8);
  CHECK(read_csv_rows(out / "eval" / "eval.csv").size() == 4);  // policy x groups

  run_baselines(cfg, out);
  REQUIRE(fs::exists(out / "baselines" / "baselines.csv"));
  // 5 experts + 4 fusions + rand_model + rand_sol + router + oracle = 13 methods
  CHECK(count_lines(out / "baselines" / "baselines_samples.jsonl") == 13 * 4 * 8);
  CHECK(read_csv_rows(out / "baselines" / "baselines.csv").size() == 13 * 4);

  run_report(cfg, out);
  const auto comparison = read_csv_rows(out / "report" / "comparison.csv");
  CHECK(comparison.size() == 14 * 4);  // policy + 13 baselines, 4 groups
  CHECK(comparison[0][0] == "policy");

  // oracle row dominates every single-expert row per group
  std::map<std::string, double> oracle_delta1, best_single;
  for (const auto& row : comparison) {
    const std::string& method = row[0];
    const std::string& group = row[1];
    const double d1 = std::stod(row[2]);
    if (method == "oracle") oracle_delta1[group] = d1;
    if (method.rfind("expert:", 0) == 0) {
      auto [it, inserted] = best_single.try_emplace(group, d1);
      if (!inserted) it->second = std::max(it->second, d1);
    }
  }
  for (const auto& [group, d1] : best_single) {
    CHECK(oracle_delta1.at(group) >= d1);
  }

  const auto hard = read_csv_rows(out / "report" / "hard_samples.csv");
  CHECK(hard.size() == 14 * 4);

  const auto freq = read_csv_rows(out / "report" / "solution_freq.csv");
  std::size_t total = 0;
  for (const auto& row : freq) total += static_cast<std::size_t>(std::stoul(row[2]));
  CHECK(total == 4 * 8);  // frequency table sums to the eval set size

  // per-sample record round-trip
  const auto records = records_from_jsonl(out / "eval" / "eval_samples.jsonl");
  CHECK(records.size() == 4 * 8);
  for (const auto& r : records) CHECK(r.method == "policy");
}

TEST_CASE("gen-data is byte-identical across reruns") {
  const RunConfig cfg = tiny_config();
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  run_gen_data(cfg, a);
  run_gen_data(cfg, b);

  for (const char* split : {"train", "eval"}) {
    CHECK(read_file(a / "data" / split / "manifest.json") ==
          read_file(b / "data" / split / "manifest.json"));
    for (const auto& entry : fs::directory_iterator(a / "data" / split / "rasters")) {
      const fs::path rel = entry.path().filename();
      CHECK(read_file(entry.path()) == read_file(b / "data" / split / "rasters" / rel));
    }
  }
}

TEST_CASE("missing prerequisites are reported by name") {
  const RunConfig cfg = tiny_config();
  const fs::path out = fresh_dir("missing");
  CHECK_THROWS_WITH(run_analyze(cfg, out),
                    Catch::Matchers::ContainsSubstring("missing prerequisites") &&
                        Catch::Matchers::ContainsSubstring("train/manifest.json"));
  CHECK_THROWS_WITH(run_report(cfg, out),
                    Catch::Matchers::ContainsSubstring("missing prerequisites"));
}

TEST_CASE("worker count honors the thread cap variable") {
  const char* kVar = "DEPTH_ROUTER_LAB_THREADS";
  const char* saved = std::getenv(kVar);

  setenv(kVar, "3", 1);
  CHECK(worker_count() == 3);
  setenv(kVar, "0", 1);  // 0 = auto
  CHECK(worker_count() >= 1);

  if (saved) {
    setenv(kVar, saved, 1);
  } else {
    unsetenv(kVar);
  }
}

TEST_CASE("expert raster overrides bypass the simulator") {
  const fs::path dir = fresh_dir("ingest");
  SceneSpec spec;
  spec.seed = 77;
  spec.width = 10;
  spec.height = 8;
  Sample s = generate_scene(spec);

  // an external prediction: gt scaled by 2, stored as a raster
  DepthMap external = s.gt;
  for (auto& v : external.values) v *= 2.0f;
  fs::create_directories(dir / "ext");
  write_raster(external, (dir / "ext" / "persp_a.pfm").string());

  StoredSample entry;
  entry.sample = s;
  entry.expert_rasters["persp_a"] = "ext/persp_a.pfm";

  const ExpertPool pool = default_pool();
  const auto preds = predictions_for_entry(pool, entry, dir);
  REQUIRE(preds.size() == 5);
  CHECK(preds[0].expert_id == "persp_a");
  CHECK(preds[0].depth.values == external.values);
  CHECK(preds[0].aux.mean_depth ==
        Catch::Approx(extract_aux(external).mean_depth).margin(1e-12));
  // the other four are simulated as usual
  CHECK(preds[1].depth.values == predict(pool[1], s).depth.values);
}
