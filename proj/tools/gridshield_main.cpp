#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "gridshield/commands.hpp"

using namespace gridshield;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> output_override;
  std::optional<int> threads_override;
};

void add_common(CLI::App* app, CommonOpts& opts, bool needs_config = true) {
  auto* c = app->add_option("-c,--config", opts.config_path, "run configuration file");
  if (needs_config) c->required();
  app->add_option("--seed", opts.seed_override, "override the global seed");
  app->add_option("--out-dir", opts.output_override, "override the output directory");
  app->add_option("--threads", opts.threads_override, "cap worker threads");
}

RunConfig load(const CommonOpts& opts) {
  RunConfig cfg = parse_config(std::filesystem::path(opts.config_path));
  if (opts.seed_override) {
    cfg.seed = *opts.seed_override;
    cfg.sampling.seed = *opts.seed_override;
  }
  if (opts.output_override) cfg.output_dir = *opts.output_override;
  if (opts.threads_override) cfg.threads = *opts.threads_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grid-based safety-shield synthesis in transformed state spaces"};
  app.require_subcommand(1);

  CommonOpts synth_opts, fit_opts, learn_opts, eval_opts, rollout_opts;
  std::string out_file, tree_file, shield_file, qtable_file, csv_file, svg_file;
  std::string eval_shield, policy = "greedy";
  int rollout_steps = 1000, project = 0, eval_episodes = 0;

  auto* synth = app.add_subcommand("synth", "synthesize a shield");
  add_common(synth, synth_opts);
  synth->add_option("-o,--output", out_file, "shield output file")->required();

  auto* fit = app.add_subcommand(
      "fit", "bounded marking, boundary extraction and polynomial fit");
  add_common(fit, fit_opts);
  fit->add_option("-o,--output", csv_file, "boundary CSV output file")->required();

  auto* tree = app.add_subcommand("tree", "compress a shield into a decision tree");
  tree->add_option("shield", shield_file, "shield file")->required();
  tree->add_option("-o,--output", tree_file, "tree output file")->required();

  auto* learn = app.add_subcommand(
      "learn", "run the shielding x learning-space experiment grid");
  add_common(learn, learn_opts);

  auto* eval = app.add_subcommand("eval", "evaluate a policy");
  add_common(eval, eval_opts);
  eval->add_option("--qtable", qtable_file, "q-table file (greedy policy)");
  eval->add_option("--shield", eval_shield, "shield file");
  eval->add_option("--policy", policy, "greedy|random")->capture_default_str();
  eval->add_option("--episodes", eval_episodes, "episode count override");
  eval->add_option("-o,--output", csv_file, "per-episode CSV output")->required();

  auto* rollout = app.add_subcommand("rollout", "random-agent trajectory export");
  add_common(rollout, rollout_opts);
  rollout->add_option("--steps", rollout_steps, "trajectory length")
      ->capture_default_str();
  rollout->add_option("-o,--output", csv_file, "trajectory CSV output")->required();

  auto* heatmap = app.add_subcommand("heatmap", "render a shield as an SVG image");
  heatmap->add_option("shield", shield_file, "shield file")->required();
  heatmap->add_option("-o,--output", svg_file, "SVG output file")->required();
  heatmap->add_option("--project", project,
                      "back-project to the original space at this resolution");

  auto* info = app.add_subcommand("info", "print the header of a binary file");
  info->add_option("file", shield_file, "shield/tree/q-table file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(load(synth_opts), out_file, std::cout);
    if (fit->parsed()) return cmd_fit(load(fit_opts), csv_file, std::cout);
    if (tree->parsed()) return cmd_tree(shield_file, tree_file, std::cout);
    if (learn->parsed()) return cmd_learn(load(learn_opts), std::cout);
    if (eval->parsed()) {
      std::optional<std::filesystem::path> shield;
      if (!eval_shield.empty()) shield = eval_shield;
      return cmd_eval(load(eval_opts), qtable_file, shield, policy, eval_episodes,
                      csv_file, std::cout);
    }
    if (rollout->parsed())
      return cmd_rollout(load(rollout_opts), rollout_steps, csv_file, std::cout);
    if (heatmap->parsed()) return cmd_heatmap(shield_file, svg_file, project, std::cout);
    if (info->parsed()) return cmd_info(shield_file, std::cout);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
