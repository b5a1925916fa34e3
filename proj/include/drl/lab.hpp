#pragma once

// Umbrella header for the depth-router lab.

#include "drl/analysis.hpp"
#include "drl/baselines.hpp"
#include "drl/commands.hpp"
#include "drl/config.hpp"
#include "drl/dataset.hpp"
#include "drl/depth_map.hpp"
#include "drl/episode.hpp"
#include "drl/experts.hpp"
#include "drl/fusion.hpp"
#include "drl/grpo.hpp"
#include "drl/metrics.hpp"
#include "drl/parallel.hpp"
#include "drl/pfm.hpp"
#include "drl/policy.hpp"
#include "drl/reporting.hpp"
#include "drl/rewards.hpp"
#include "drl/rng.hpp"
#include "drl/scene.hpp"
#include "drl/serialize.hpp"
