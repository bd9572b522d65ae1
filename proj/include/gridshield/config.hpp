#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridshield/grid.hpp"
#include "gridshield/learn.hpp"
#include "gridshield/model.hpp"
#include "gridshield/synthesis.hpp"
#include "gridshield/transform.hpp"

namespace gridshield {

enum class SynthMode { fixpoint, bounded };

struct ShieldRef {
  std::string label;  // "none", "S", "T", ...
  std::string file;   // empty for "none"
};

struct LearningConfig {
  std::vector<LearnSpace> spaces = {LearnSpace::original};
  std::vector<ShieldRef> shields = {{"none", ""}};
  int episodes = 1000;
  int eval_episodes = 1000;
  double horizon_seconds = 0.0;  // 0 selects the per-model default
  double alpha = 0.1;
  double gamma = 0.97;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_fraction = 0.7;
  std::optional<std::vector<GridAxis>> observation_grid;
};

/// One configuration file drives synthesis, fitting, learning and export;
/// all validation errors carry the offending field path.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  std::string model_name;
  nlohmann::json model_params = nlohmann::json::object();
  std::string transform_name = "identity";
  nlohmann::json transform_params = nlohmann::json::object();
  std::vector<GridAxis> grid_axes;
  SamplingConfig sampling;
  SynthMode synth_mode = SynthMode::fixpoint;
  int bounded_sweeps = 3;
  std::vector<int> fit_powers = {1, 3};
  LearningConfig learning;
  std::filesystem::path output_dir = "out";
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config(const nlohmann::json& j);

ControlModel build_model(const RunConfig& cfg);
RewardModel build_reward(const RunConfig& cfg);
Transform build_transform(const RunConfig& cfg, const ControlModel& model);
GridSpec build_grid(const RunConfig& cfg);

/// Default per-episode horizon (in steps) of a model.
int default_horizon_steps(const ControlModel& model);

/// Default observation grid of a model in a learning space.
GridSpec default_observation_grid(const ControlModel& model, LearnSpace space,
                                  const Transform& tr);

}  // namespace gridshield
