#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "drl/analysis.hpp"
#include "drl/serialize.hpp"

namespace drl {

// One scored (method, sample) pair; the common currency of eval, baselines
// and report.
struct MethodSampleRecord {
  std::string method;
  std::string sample_id;
  CameraDomain domain = CameraDomain::Perspective;
  MetricSet metrics;
  int n_experts = 1;
  Solution solution;
};

inline json record_to_json(const MethodSampleRecord& r) {
  return json{{"method", r.method},
              {"sample_id", r.sample_id},
              {"group", to_string(r.domain)},
              {"delta1", r.metrics.delta1},
              {"abs_rel", r.metrics.abs_rel},
              {"rmse", r.metrics.rmse},
              {"n", r.n_experts},
              {"solution", solution_to_json(r.solution)}};
}

inline MethodSampleRecord record_from_json(const json& j) {
  MethodSampleRecord r;
  r.method = j.at("method").get<std::string>();
  r.sample_id = j.at("sample_id").get<std::string>();
  r.domain = camera_domain_from_string(j.at("group").get<std::string>());
  r.metrics.delta1 = j.at("delta1").get<double>();
  r.metrics.abs_rel = j.at("abs_rel").get<double>();
  r.metrics.rmse = j.at("rmse").get<double>();
  r.n_experts = j.at("n").get<int>();
  r.solution = solution_from_json(j.at("solution"));
  return r;
}

inline std::string records_to_jsonl(const std::vector<MethodSampleRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<MethodSampleRecord> records_from_jsonl(const std::filesystem::path& path) {
  std::vector<MethodSampleRecord> out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(json::parse(line)));
  }
  return out;
}

struct MethodGroupMean {
  double delta1 = 0.0;
  double abs_rel = 0.0;
  double rmse = 0.0;
  double n_mean = 0.0;
  std::size_t count = 0;
};

inline MethodGroupMean aggregate(const std::vector<const MethodSampleRecord*>& records) {
  MethodGroupMean m;
  for (const auto* r : records) {
    m.delta1 += r->metrics.delta1;
    m.abs_rel += r->metrics.abs_rel;
    m.rmse += r->metrics.rmse;
    m.n_mean += r->n_experts;
    ++m.count;
  }
  if (m.count > 0) {
    const double n = static_cast<double>(m.count);
    m.delta1 /= n;
    m.abs_rel /= n;
    m.rmse /= n;
    m.n_mean /= n;
  }
  return m;
}

// Per (method, group) means in a stable method order, one CSV row each.
inline std::vector<std::vector<std::string>> method_group_rows(
    const std::vector<MethodSampleRecord>& records,
    const std::vector<std::string>& method_order) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& method : method_order) {
    for (CameraDomain d : kAllDomains) {
      std::vector<const MethodSampleRecord*> subset;
      for (const auto& r : records) {
        if (r.method == method && r.domain == d) subset.push_back(&r);
      }
      if (subset.empty()) continue;
      const MethodGroupMean m = aggregate(subset);
      rows.push_back({method, to_string(d), fmt_double(m.delta1), fmt_double(m.abs_rel),
                      fmt_double(m.rmse), fmt_double(m.n_mean)});
    }
  }
  return rows;
}

inline std::vector<std::string> method_order_of(
    const std::vector<MethodSampleRecord>& records) {
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (std::find(order.begin(), order.end(), r.method) == order.end()) {
      order.push_back(r.method);
    }
  }
  return order;
}

inline constexpr const char* kMetricCsvDoc =
    "schema: method,group,delta1,abs_rel,rmse,n_mean -- per-sample means over the "
    "group; n_mean is the mean number of distinct experts per solution";

inline const std::vector<std::string> kMetricCsvHeader = {
    "method", "group", "delta1", "abs_rel", "rmse", "n_mean"};

// Command manifest: config hash, seed and artifact schema versions, enough
// to re-derive every emitted file bit-exactly together with the config.
inline constexpr int kArtifactVersion = 1;

inline void write_command_manifest(const std::filesystem::path& dir,
                                   const std::string& command, const json& config_json,
                                   std::uint64_t master_seed,
                                   const std::vector<std::string>& outputs) {
  json m{{"command", command},
         {"config_hash", config_hash(config_json)},
         {"master_seed", master_seed},
         {"artifact_version", kArtifactVersion},
         {"feature_layout_version", kFeatureLayoutVersion},
         {"outputs", outputs}};
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

inline void require_prerequisites(const std::vector<std::filesystem::path>& paths) {
  std::string missing;
  for (const auto& p : paths) {
    if (!std::filesystem::exists(p)) {
      if (!missing.empty()) missing += ", ";
      missing += p.string();
    }
  }
  if (!missing.empty()) throw std::runtime_error("missing prerequisites: " + missing);
}

}  // namespace drl
