#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "drl/parallel.hpp"
#include "drl/scene.hpp"

namespace drl {

// One generated dataset = count samples per camera-domain group, mirroring
// the 200-training-samples-per-dataset analysis protocol.
struct DatasetConfig {
  int count_per_group = 200;
  int width = 64;
  int height = 48;
  double indoor_min = 0.5, indoor_max = 10.0;
  double outdoor_min = 1.0, outdoor_max = 80.0;
  double indoor_fraction = 0.5;
  LabelNoise noise;
  std::vector<CameraDomain> groups{kAllDomains.begin(), kAllDomains.end()};
};

inline SceneSpec make_scene_spec(const DatasetConfig& cfg, CameraDomain domain,
                                 std::uint64_t sample_seed) {
  SceneSpec spec;
  spec.domain = domain;
  spec.seed = sample_seed;
  spec.width = cfg.width;
  spec.height = cfg.height;
  Rng rng(derive_seed(sample_seed, "scene-type"));
  spec.scene = bernoulli(rng, cfg.indoor_fraction) ? SceneType::Indoor : SceneType::Outdoor;
  if (spec.scene == SceneType::Indoor) {
    spec.depth_min = cfg.indoor_min;
    spec.depth_max = cfg.indoor_max;
  } else {
    spec.depth_min = cfg.outdoor_min;
    spec.depth_max = cfg.outdoor_max;
  }
  return spec;
}

// Deterministic in (master_seed, split): each sample owns an independent
// seed substream, so generation parallelizes without shared state.
inline std::vector<Sample> generate_dataset(const DatasetConfig& cfg,
                                            std::uint64_t master_seed,
                                            std::string_view split) {
  const std::uint64_t split_seed =
      derive_seed(derive_seed(master_seed, "dataset"), split);
  std::vector<SceneSpec> specs;
  specs.reserve(cfg.groups.size() * static_cast<std::size_t>(cfg.count_per_group));
  for (std::size_t g = 0; g < cfg.groups.size(); ++g) {
    const std::uint64_t group_seed = derive_seed(split_seed, to_string(cfg.groups[g]));
    for (int i = 0; i < cfg.count_per_group; ++i) {
      specs.push_back(make_scene_spec(cfg, cfg.groups[g],
                                      derive_seed(group_seed, "sample", static_cast<std::uint64_t>(i))));
    }
  }
  std::vector<Sample> samples(specs.size());
  parallel_for(specs.size(), [&](std::size_t i) {
    samples[i] = generate_scene(specs[i], cfg.noise);
  });
  return samples;
}

inline std::vector<const Sample*> samples_in_group(const std::vector<Sample>& samples,
                                                   CameraDomain domain) {
  std::vector<const Sample*> out;
  for (const auto& s : samples) {
    if (s.spec.domain == domain) out.push_back(&s);
  }
  return out;
}

}  // namespace drl
