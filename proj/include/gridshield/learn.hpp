#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "gridshield/model.hpp"
#include "gridshield/strategy.hpp"

namespace gridshield {

/// Which space the agent observes: the original state, or the state mapped
/// through the transform (transform dims first, remaining dims unchanged).
enum class LearnSpace { original, transformed };

struct EpisodeResult {
  int episode = 0;
  double ret = 0.0;
  int violations = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  bool uncontrollable_start = false;
};

struct QTable {
  GridSpec obs_grid;
  std::vector<std::string> actions;
  LearnSpace space = LearnSpace::original;
  Transform space_transform;  // identity when learning in the original space
  std::vector<double> q;      // obs cell x action, row-major

  double value(std::size_t cell, int action) const {
    return q[cell * actions.size() + static_cast<std::size_t>(action)];
  }
};

struct TrainConfig {
  double alpha = 0.1;
  double gamma = 0.97;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_fraction = 0.7;  // fraction of episodes over which eps anneals
  int episodes = 1000;
  int horizon = 1200;  // steps per episode
};

/// Allowed-action mask of a full model state under a shield (the shield
/// observes the model's shield_dims prefix). 0 when the state maps outside
/// the shield's domain or grid.
std::uint8_t shield_mask(const ControlModel& model, const Strategy& shield,
                         const Vec& s);

/// Observation of a state in the learning space.
Vec observe(const ControlModel& model, LearnSpace space, const Transform& tr,
            const Vec& s);

using InitialSampler = std::function<Vec(SplitMix64&)>;

/// Tabular Q-learning. Actions are epsilon-greedy over the allowed set
/// (all actions when unshielded); an episode ends at the horizon or on a
/// safety violation. Episodes whose initial state is uncontrollable under
/// the shield are recorded as such and skipped. (seed, config) fully
/// determine the result.
QTable train(const ControlModel& model, const RewardModel& reward,
             const Strategy* shield, LearnSpace space, const Transform& space_tr,
             const GridSpec& obs_grid, const TrainConfig& cfg,
             const InitialSampler& initial, std::uint64_t seed,
             std::vector<EpisodeResult>* log = nullptr);

struct EvalSummary {
  double mean_return = 0.0;
  long total_violations = 0;
  long uncontrollable_starts = 0;
  std::vector<EpisodeResult> episodes;
};

/// Monte-Carlo evaluation. policy = nullptr plays uniformly random
/// proposals; otherwise greedy proposals from the Q-table. Proposals are
/// filtered through the shield when present. Episodes use independent
/// seeded streams, so results do not depend on the thread count.
EvalSummary evaluate(const ControlModel& model, const RewardModel& reward,
                     const QTable* policy, const Strategy* shield, int episodes,
                     int horizon, const InitialSampler& initial,
                     std::uint64_t seed, int threads = 1);

struct Rollout {
  std::vector<Vec> states;   // length steps + 1
  std::vector<int> actions;  // length steps
  std::vector<bool> unsafe;  // per state
};

/// Trajectory of a uniformly random agent with per-state safety flags.
Rollout random_rollout(const ControlModel& model, int steps,
                       const InitialSampler& initial, std::uint64_t seed);

// Q-table file: magic "QTAB", the shield header scheme (observation grid,
// action names, learning-space transform), a u8 learning-space flag, then
// the f64 value array.
void save_qtable(const QTable& qt, const std::filesystem::path& path);
QTable load_qtable(const std::filesystem::path& path);

}  // namespace gridshield
