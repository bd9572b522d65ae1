#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gridshield/config.hpp"
#include "gridshield/strategy.hpp"
#include "gridshield/synthesis.hpp"
#include "gridshield/tree.hpp"

namespace gridshield {

// Exit codes shared by the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitEmptyControllable = 2;
inline constexpr int kExitRuntime = 3;

struct SynthStats {
  std::size_t cells = 0;
  std::size_t controllable = 0;
  std::size_t sweeps = 0;
  double seconds = 0.0;
};

struct SynthResult {
  Strategy strategy;
  SynthStats stats;
};

/// Synthesis pipeline: transitions, initial marking, fixpoint (or bounded
/// iteration), most-permissive masks.
SynthResult run_synth(const RunConfig& cfg);

struct FitResult {
  std::vector<double> coefficients;  // per cfg.fit_powers
  std::vector<BoundaryColumn> columns;
};

/// Bounded marking, boundary extraction and odd-polynomial fit. Exposed
/// with an explicit model/transform so synthetic systems can be fitted in
/// tests; cmd_fit wires it to a configuration.
FitResult run_fit(const ControlModel& model, const Transform& tr, const GridSpec& grid,
                  const SamplingConfig& sampling, int sweeps,
                  std::span<const int> powers, int threads);

int cmd_synth(const RunConfig& cfg, const std::filesystem::path& out,
              std::ostream& log);
int cmd_fit(const RunConfig& cfg, const std::filesystem::path& csv_out,
            std::ostream& log);
int cmd_tree(const std::filesystem::path& shield_file,
             const std::filesystem::path& tree_out, std::ostream& log);
int cmd_learn(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, const std::filesystem::path& qtable_file,
             const std::optional<std::filesystem::path>& shield_file,
             const std::string& policy, int episodes,
             const std::filesystem::path& csv_out, std::ostream& log);
int cmd_rollout(const RunConfig& cfg, int steps,
                const std::filesystem::path& csv_out, std::ostream& log);
int cmd_heatmap(const std::filesystem::path& shield_file,
                const std::filesystem::path& svg_out, int project_resolution,
                std::ostream& log);
int cmd_info(const std::filesystem::path& file, std::ostream& log);

/// SVG rendering of a 2-D strategy (one rectangle per cell, colored by
/// action mask). project_resolution > 0 renders the back-projection to the
/// original space instead, coloring each pixel via the state-level query.
std::string render_heatmap_svg(const Strategy& st, int project_resolution = 0);

void write_episode_csv(const std::filesystem::path& path,
                       const std::vector<EpisodeResult>& episodes);

}  // namespace gridshield
