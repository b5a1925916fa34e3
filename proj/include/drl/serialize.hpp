#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "drl/baselines.hpp"
#include "drl/dataset.hpp"
#include "drl/experts.hpp"
#include "drl/fusion.hpp"
#include "drl/pfm.hpp"
#include "drl/policy.hpp"

namespace drl {

using json = nlohmann::json;

// Configuration and input-format problems exit with code 2; everything else
// is a runtime error (exit 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  if (!obj.is_object()) throw ConfigError(context + ": expected a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(context + ": unknown key '" + item.key() + "'");
  }
}

// All output files are written atomically (temp + rename) so interrupted
// runs never leave half-written artifacts.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// CSV with a schema doc line ('# ...'), then the header, then rows.
inline std::string make_csv(const std::string& doc, const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows) {
  std::string out = "# " + doc + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i];
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// enum <-> string

inline CameraDomain camera_domain_from_string(const std::string& s) {
  for (CameraDomain d : kAllDomains) {
    if (s == to_string(d)) return d;
  }
  throw ConfigError("unknown camera domain: " + s);
}

inline SceneType scene_type_from_string(const std::string& s) {
  if (s == "indoor") return SceneType::Indoor;
  if (s == "outdoor") return SceneType::Outdoor;
  throw ConfigError("unknown scene type: " + s);
}

inline CoarseCamera coarse_camera_from_string(const std::string& s) {
  if (s == "perspective_like") return CoarseCamera::PerspectiveLike;
  if (s == "erp_like") return CoarseCamera::ErpLike;
  throw ConfigError("unknown coarse camera label: " + s);
}

inline ExpertFamily expert_family_from_string(const std::string& s) {
  if (s == "perspective") return ExpertFamily::Perspective;
  if (s == "erp") return ExpertFamily::Erp;
  throw ConfigError("unknown expert family: " + s);
}

// ---------------------------------------------------------------------------
// Solution JSON: {"experts": [...], "strategy": "..."} — this exact encoding
// appears in rollout logs and reports.

inline json solution_to_json(const Solution& s) {
  return json{{"experts", s.experts}, {"strategy", to_string(s.strategy)}};
}

inline Solution solution_from_json(const json& j) {
  require_keys(j, {"experts", "strategy"}, "solution");
  return Solution(j.at("experts").get<std::vector<std::string>>(),
                  fusion_strategy_from_string(j.at("strategy").get<std::string>()));
}

// ---------------------------------------------------------------------------
// Expert pool preset

inline json pool_to_json(const ExpertPool& pool) {
  json experts = json::array();
  for (const auto& e : pool) {
    json domains;
    for (CameraDomain d : kAllDomains) {
      const DomainErrorParams& p = e.domain_params(d);
      domains[to_string(d)] = {{"log_bias", p.log_bias},
                               {"log_noise_sigma", p.log_noise_sigma},
                               {"correlation_cycles", p.correlation_cycles},
                               {"outlier_rate", p.outlier_rate},
                               {"outlier_log_scale", p.outlier_log_scale}};
    }
    experts.push_back(json{{"expert_id", e.expert_id},
                           {"family", to_string(e.family)},
                           {"family_corr", e.family_corr},
                           {"domains", domains}});
  }
  return json{{"experts", experts}};
}

inline ExpertPool pool_from_json(const json& j) {
  require_keys(j, {"experts"}, "pool");
  ExpertPool pool;
  for (const auto& je : j.at("experts")) {
    require_keys(je, {"expert_id", "family", "family_corr", "domains"}, "pool expert");
    ExpertProfile e;
    e.expert_id = je.at("expert_id").get<std::string>();
    e.family = expert_family_from_string(je.at("family").get<std::string>());
    e.family_corr = je.at("family_corr").get<double>();
    if (e.family_corr < 0.0 || e.family_corr >= 1.0) {
      throw ConfigError("pool expert " + e.expert_id + ": family_corr outside [0,1)");
    }
    const json& domains = je.at("domains");
    for (CameraDomain d : kAllDomains) {
      if (!domains.contains(to_string(d))) {
        throw ConfigError("pool expert " + e.expert_id + ": missing domain " +
                          to_string(d));
      }
      const json& jp = domains.at(to_string(d));
      require_keys(jp,
                   {"log_bias", "log_noise_sigma", "correlation_cycles", "outlier_rate",
                    "outlier_log_scale"},
                   "pool domain params");
      DomainErrorParams p;
      p.log_bias = jp.at("log_bias").get<double>();
      p.log_noise_sigma = jp.at("log_noise_sigma").get<double>();
      p.correlation_cycles = jp.at("correlation_cycles").get<double>();
      p.outlier_rate = jp.at("outlier_rate").get<double>();
      p.outlier_log_scale = jp.at("outlier_log_scale").get<double>();
      if (p.log_noise_sigma < 0.0 || p.outlier_rate < 0.0 || p.outlier_rate > 1.0) {
        throw ConfigError("pool expert " + e.expert_id + ": bad params for " +
                          to_string(d));
      }
      e.params[static_cast<std::size_t>(d)] = p;
    }
    pool.push_back(std::move(e));
  }
  if (pool.empty()) throw ConfigError("pool: no experts");
  return pool;
}

// ---------------------------------------------------------------------------
// Policy parameters

inline constexpr int kFeatureLayoutVersion = 1;

inline json policy_to_json(const PolicyParams& p) {
  json rows = json::array();
  for (int r = 0; r < PolicyParams::kRows; ++r) {
    json row = json::array();
    for (int c = 0; c < kFeatureDim; ++c) {
      row.push_back(p.W[static_cast<std::size_t>(r) * kFeatureDim + c]);
    }
    rows.push_back(std::move(row));
  }
  return json{{"feature_layout_version", kFeatureLayoutVersion},
              {"rows", PolicyParams::kRows},
              {"feature_dim", kFeatureDim},
              {"W", rows},
              {"b", p.b}};
}

inline PolicyParams policy_from_json(const json& j) {
  require_keys(j, {"feature_layout_version", "rows", "feature_dim", "W", "b"}, "policy");
  if (j.at("feature_layout_version").get<int>() != kFeatureLayoutVersion) {
    throw ConfigError("policy: unsupported feature layout version");
  }
  if (j.at("rows").get<int>() != PolicyParams::kRows ||
      j.at("feature_dim").get<int>() != kFeatureDim) {
    throw ConfigError("policy: shape mismatch");
  }
  PolicyParams p = PolicyParams::zeros();
  const json& rows = j.at("W");
  if (rows.size() != PolicyParams::kRows) throw ConfigError("policy: bad W row count");
  for (int r = 0; r < PolicyParams::kRows; ++r) {
    const json& row = rows[static_cast<std::size_t>(r)];
    if (row.size() != kFeatureDim) throw ConfigError("policy: bad W column count");
    for (int c = 0; c < kFeatureDim; ++c) {
      p.W[static_cast<std::size_t>(r) * kFeatureDim + c] =
          row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  const auto b = j.at("b").get<std::vector<double>>();
  if (b.size() != static_cast<std::size_t>(PolicyParams::kRows)) {
    throw ConfigError("policy: bad b length");
  }
  p.b = b;
  return p;
}

// ---------------------------------------------------------------------------
// Router parameters (kept for report reproducibility)

inline json router_to_json(const RouterParams& p) {
  return json{{"input_dim", p.input_dim},   {"hidden_dim", p.hidden_dim},
              {"output_dim", p.output_dim}, {"W1", p.W1},
              {"b1", p.b1},                 {"W2", p.W2},
              {"b2", p.b2}};
}

// ---------------------------------------------------------------------------
// Dataset manifest: per-sample spec, observed labels, raster path and
// optional per-expert raster overrides (externally produced predictions).

struct StoredSample {
  Sample sample;
  std::map<std::string, std::string> expert_rasters;  // expert_id -> path
};

struct StoredDataset {
  std::string split;
  std::filesystem::path base_dir;
  std::vector<StoredSample> entries;

  std::vector<Sample> samples() const {
    std::vector<Sample> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.sample);
    return out;
  }
};

inline json scene_spec_to_json(const SceneSpec& spec) {
  return json{{"domain", to_string(spec.domain)},
              {"scene", to_string(spec.scene)},
              {"seed", spec.seed},
              {"width", spec.width},
              {"height", spec.height},
              {"depth_min", spec.depth_min},
              {"depth_max", spec.depth_max}};
}

inline SceneSpec scene_spec_from_json(const json& j) {
  require_keys(j, {"domain", "scene", "seed", "width", "height", "depth_min", "depth_max"},
               "scene spec");
  SceneSpec spec;
  spec.domain = camera_domain_from_string(j.at("domain").get<std::string>());
  spec.scene = scene_type_from_string(j.at("scene").get<std::string>());
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.width = j.at("width").get<int>();
  spec.height = j.at("height").get<int>();
  spec.depth_min = j.at("depth_min").get<double>();
  spec.depth_max = j.at("depth_max").get<double>();
  return spec;
}

// Writes rasters plus the manifest under dir; returns the manifest JSON.
inline json store_dataset(const std::vector<Sample>& samples, const std::string& split,
                          std::uint64_t master_seed, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "rasters");
  json entries = json::array();
  for (const auto& s : samples) {
    const std::string rel = "rasters/" + s.sample_id + ".pfm";
    write_raster(s.gt, (dir / rel).string());
    entries.push_back(json{{"sample_id", s.sample_id},
                           {"spec", scene_spec_to_json(s.spec)},
                           {"observed_scene", to_string(s.observed_scene)},
                           {"observed_camera", to_string(s.observed_camera)},
                           {"gt", rel}});
  }
  json manifest{{"split", split}, {"master_seed", master_seed}, {"samples", entries}};
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

inline StoredDataset load_dataset(const std::filesystem::path& dir) {
  const json manifest = load_json(dir / "manifest.json");
  require_keys(manifest, {"split", "master_seed", "samples"}, "dataset manifest");
  StoredDataset ds;
  ds.split = manifest.at("split").get<std::string>();
  ds.base_dir = dir;
  for (const auto& je : manifest.at("samples")) {
    require_keys(je,
                 {"sample_id", "spec", "observed_scene", "observed_camera", "gt",
                  "expert_rasters"},
                 "dataset sample");
    StoredSample entry;
    entry.sample.sample_id = je.at("sample_id").get<std::string>();
    entry.sample.spec = scene_spec_from_json(je.at("spec"));
    entry.sample.observed_scene =
        scene_type_from_string(je.at("observed_scene").get<std::string>());
    entry.sample.observed_camera =
        coarse_camera_from_string(je.at("observed_camera").get<std::string>());
    entry.sample.gt = read_raster((dir / je.at("gt").get<std::string>()).string());
    if (je.contains("expert_rasters")) {
      entry.expert_rasters =
          je.at("expert_rasters").get<std::map<std::string, std::string>>();
    }
    ds.entries.push_back(std::move(entry));
  }
  return ds;
}

// Prediction provider honoring per-sample raster overrides from the
// manifest: an expert with a stored raster is ingested instead of simulated.
inline std::vector<ExpertPrediction> predictions_for_entry(const ExpertPool& pool,
                                                           const StoredSample& entry,
                                                           const std::filesystem::path& base) {
  std::vector<ExpertPrediction> preds;
  preds.reserve(pool.size());
  for (const auto& e : pool) {
    auto it = entry.expert_rasters.find(e.expert_id);
    if (it == entry.expert_rasters.end()) {
      preds.push_back(predict(e, entry.sample));
    } else {
      ExpertPrediction p;
      p.expert_id = e.expert_id;
      p.depth = read_raster((base / it->second).string());
      if (!p.depth.same_shape(entry.sample.gt)) {
        throw std::runtime_error("expert raster shape mismatch for " + e.expert_id +
                                 " on " + entry.sample.sample_id);
      }
      p.aux = extract_aux(p.depth);
      preds.push_back(std::move(p));
    }
  }
  return preds;
}

// FNV-1a over the canonical (sorted-key) dump; recorded in run manifests.
inline std::string config_hash(const json& j) {
  const std::string dump = j.dump();
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash_str(dump)));
  return buf;
}

}  // namespace drl
