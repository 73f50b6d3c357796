#pragma once

#include "rslam/pipeline.hpp"
#include "rslam/simulator.hpp"

#include <string>
#include <vector>

namespace rslam {

struct SimulateConfig {
  std::uint64_t world_seed = 42;
  WorldGenOptions world;
  SequenceOptions sequence;
  std::vector<Pose2> waypoints;  // default: closed 100 m square
};

struct Config {
  SimulateConfig simulate;
  PipelineParams pipeline;
};

// Strict JSON config: unknown keys anywhere raise std::runtime_error naming
// the offending path, so typos never silently fall back to defaults. Every
// key is optional; angles are radians, lengths meters, times seconds.
Config parse_config_json(const std::string& text);
Config load_config(const std::string& path);

std::string default_config_json();  // current defaults, serialized

}  // namespace rslam
