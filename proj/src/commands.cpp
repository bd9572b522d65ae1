#include "gridshield/commands.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gridshield/learn.hpp"

namespace gridshield {

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void report_uncontrollable_starts(std::ostream& log, const std::string& tag,
                                  const std::vector<EpisodeResult>& episodes) {
  long count = 0;
  std::string indices;
  for (const EpisodeResult& e : episodes) {
    if (!e.uncontrollable_start) continue;
    if (count < 10) indices += (count ? ", " : "") + std::to_string(e.episode);
    ++count;
  }
  if (count == 0) return;
  log << tag << ": " << count << " episode(s) started outside the controllable set"
      << " (episodes " << indices << (count > 10 ? ", ..." : "") << ")\n";
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

void ensure_parent_dir(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

}  // namespace

SynthResult run_synth(const RunConfig& cfg) {
  const ControlModel model = build_model(cfg);
  const Transform tr = build_transform(cfg, model);
  const GridSpec grid = build_grid(cfg);
  if (grid.bounds() != tr.codomain)
    throw config_error("grid: box does not match the transform codomain");

  const auto start = std::chrono::steady_clock::now();
  const TransitionTable tt =
      compute_transitions(model, tr, grid, cfg.sampling, cfg.threads);
  const SafeSet init = initial_safe(grid, tr, model.safety, cfg.sampling);

  std::size_t sweeps = 0;
  const SafeSet safe = cfg.synth_mode == SynthMode::fixpoint
                           ? fixpoint(tt, init, &sweeps)
                           : bounded_fixpoint(tt, init,
                                              static_cast<std::size_t>(cfg.bounded_sweeps),
                                              &sweeps);

  SynthResult result;
  result.strategy.grid = grid;
  result.strategy.actions = model.actions;
  result.strategy.transform = tr;
  result.strategy.masks = permissive_masks(tt, safe);
  result.stats.cells = grid.cell_count();
  result.stats.controllable = result.strategy.controllable_count();
  result.stats.sweeps = sweeps;
  result.stats.seconds = elapsed_seconds(start);
  return result;
}

int cmd_synth(const RunConfig& cfg, const std::filesystem::path& out,
              std::ostream& log) {
  SynthResult r = run_synth(cfg);
  log << "cells: " << r.stats.cells << "\n"
      << "controllable: " << r.stats.controllable << "\n"
      << "sweeps: " << r.stats.sweeps << "\n"
      << "synthesis seconds: " << fmt("%.3f", r.stats.seconds) << "\n"
      << "kv cells=" << r.stats.cells << " controllable=" << r.stats.controllable
      << " sweeps=" << r.stats.sweeps << " seconds=" << fmt("%.6f", r.stats.seconds)
      << "\n";
  if (r.stats.controllable == 0) {
    log << "controllable set empty; no shield written\n";
    return kExitEmptyControllable;
  }
  ensure_parent_dir(out);
  save_strategy(r.strategy, out);
  log << "shield written to " << out.string() << "\n";
  return kExitOk;
}

FitResult run_fit(const ControlModel& model, const Transform& tr, const GridSpec& grid,
                  const SamplingConfig& sampling, int sweeps,
                  std::span<const int> powers, int threads) {
  if (grid.dim() != 2) throw config_error("fit requires a 2-D model/grid");
  const TransitionTable tt = compute_transitions(model, tr, grid, sampling, threads);
  const SafeSet init = initial_safe(grid, tr, model.safety, sampling);
  const SafeSet marking =
      bounded_fixpoint(tt, init, static_cast<std::size_t>(sweeps));

  FitResult result;
  result.columns = extract_boundaries(marking, grid);
  std::vector<std::pair<double, double>> pts;
  pts.reserve(result.columns.size());
  for (const BoundaryColumn& c : result.columns) pts.emplace_back(c.x_center, c.mid);
  result.coefficients = fit_odd_polynomial(pts, powers);
  return result;
}

int cmd_fit(const RunConfig& cfg, const std::filesystem::path& csv_out,
            std::ostream& log) {
  const ControlModel model = build_model(cfg);
  const Transform tr = build_transform(cfg, model);
  const GridSpec grid = build_grid(cfg);
  if (grid.bounds() != tr.codomain)
    throw config_error("grid: box does not match the transform codomain");

  const int sweeps = cfg.synth_mode == SynthMode::bounded ? cfg.bounded_sweeps : 3;
  const FitResult r = run_fit(model, tr, grid, cfg.sampling, sweeps,
                              cfg.fit_powers, cfg.threads);

  log << "fitted coefficients:";
  for (std::size_t i = 0; i < r.coefficients.size(); ++i)
    log << " x^" << cfg.fit_powers[i] << ": " << fmt("%.7g", r.coefficients[i]);
  log << "\nkv";
  for (std::size_t i = 0; i < r.coefficients.size(); ++i)
    log << " c" << cfg.fit_powers[i] << "=" << fmt("%.17g", r.coefficients[i]);
  log << "\n";

  ensure_parent_dir(csv_out);
  std::ofstream csv(csv_out, std::ios::trunc);
  if (!csv) throw io_error("cannot open '" + csv_out.string() + "' for writing");
  csv << "x,upper,lower,mid\r\n";
  for (const BoundaryColumn& c : r.columns)
    csv << fmt("%.10g", c.x_center) << "," << fmt("%.10g", c.upper) << ","
        << fmt("%.10g", c.lower) << "," << fmt("%.10g", c.mid) << "\r\n";
  log << "boundary table written to " << csv_out.string() << "\n";
  return kExitOk;
}

int cmd_tree(const std::filesystem::path& shield_file,
             const std::filesystem::path& tree_out, std::ostream& log) {
  const Strategy st = load_strategy(shield_file);
  const DecisionTree tree = to_tree(st);

  // Equivalence over every cell center is an internal bug guard; abort
  // rather than write a wrong tree.
  for (std::size_t f = 0; f < st.grid.cell_count(); ++f) {
    const Vec center = st.grid.cell_center(st.grid.unflatten(f));
    if (tree.evaluate(center) != st.masks[f])
      throw std::logic_error("tree/strategy mismatch at cell " + std::to_string(f));
  }

  ensure_parent_dir(tree_out);
  save_tree(tree, tree_out);
  const double ratio = tree.node_count() > 0
                           ? static_cast<double>(st.grid.cell_count()) /
                                 static_cast<double>(tree.node_count())
                           : 0.0;
  log << "cells: " << st.grid.cell_count() << "\n"
      << "nodes: " << tree.node_count() << "\n"
      << "compression: " << fmt("%.2f", ratio) << "x\n"
      << "kv cells=" << st.grid.cell_count() << " nodes=" << tree.node_count()
      << " ratio=" << fmt("%.6f", ratio) << "\n"
      << "tree written to " << tree_out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Learning commands

void write_episode_csv(const std::filesystem::path& path,
                       const std::vector<EpisodeResult>& episodes) {
  ensure_parent_dir(path);
  std::ofstream csv(path, std::ios::trunc);
  if (!csv) throw io_error("cannot open '" + path.string() + "' for writing");
  csv << "episode,return,violations,steps\r\n";
  double sum = 0.0;
  long violations = 0, steps = 0;
  for (const EpisodeResult& e : episodes) {
    csv << e.episode << "," << fmt("%.6f", e.ret) << "," << e.violations << ","
        << e.steps << "\r\n";
    sum += e.ret;
    violations += e.violations;
    steps += e.steps;
  }
  const double mean = episodes.empty() ? 0.0 : sum / static_cast<double>(episodes.size());
  csv << "summary," << fmt("%.6f", mean) << "," << violations << "," << steps
      << "\r\n";
}

namespace {

struct LearnSetup {
  ControlModel model;
  RewardModel reward;
  Transform transform;
  InitialSampler initial;
  TrainConfig train_cfg;
};

LearnSetup make_learn_setup(const RunConfig& cfg) {
  LearnSetup s{build_model(cfg), build_reward(cfg), Transform{}, nullptr, {}};
  s.transform = build_transform(cfg, s.model);
  s.initial = default_initial_sampler(s.model);
  const LearningConfig& lc = cfg.learning;
  s.train_cfg.alpha = lc.alpha;
  s.train_cfg.gamma = lc.gamma;
  s.train_cfg.eps_start = lc.eps_start;
  s.train_cfg.eps_end = lc.eps_end;
  s.train_cfg.eps_fraction = lc.eps_fraction;
  s.train_cfg.episodes = lc.episodes;
  s.train_cfg.horizon = lc.horizon_seconds > 0.0
                            ? static_cast<int>(std::lround(lc.horizon_seconds / s.model.period))
                            : default_horizon_steps(s.model);
  return s;
}

std::string space_name(LearnSpace s) {
  return s == LearnSpace::original ? "S" : "T";
}

}  // namespace

int cmd_learn(const RunConfig& cfg, std::ostream& log) {
  LearnSetup setup = make_learn_setup(cfg);
  const LearningConfig& lc = cfg.learning;
  std::filesystem::create_directories(cfg.output_dir);

  // Preload shield files once; "none" entries carry no shield.
  std::vector<std::optional<Strategy>> shields;
  for (const ShieldRef& ref : lc.shields) {
    if (ref.label == "none") {
      shields.emplace_back();
    } else {
      if (!std::filesystem::exists(ref.file))
        throw config_error("learning.shields: shield file '" + ref.file +
                           "' does not exist");
      shields.emplace_back(load_strategy(ref.file));
    }
  }

  struct SummaryRow {
    std::string space, shield;
    double mean_return;
    long violations;
    long uncontrollable;
  };
  std::vector<SummaryRow> rows;

  int combo = 0;
  for (LearnSpace space : lc.spaces) {
    for (std::size_t si = 0; si < lc.shields.size(); ++si, ++combo) {
      const Strategy* shield = shields[si] ? &*shields[si] : nullptr;
      const std::string tag = space_name(space) + "_" + lc.shields[si].label;
      const std::uint64_t combo_seed = mix_seed(cfg.seed, 0x636f6d626fULL, combo);

      GridSpec obs = lc.observation_grid
                         ? GridSpec(*lc.observation_grid)
                         : default_observation_grid(setup.model, space, setup.transform);

      // The stored observation transform must match what the agent saw:
      // raw states in the original space, the model transform otherwise.
      const Transform obs_tr = space == LearnSpace::original
                                   ? identity_transform(setup.model.bounds)
                                   : setup.transform;

      std::vector<EpisodeResult> train_log;
      const QTable qt = train(setup.model, setup.reward, shield, space, obs_tr,
                              obs, setup.train_cfg, setup.initial, combo_seed,
                              &train_log);
      write_episode_csv(cfg.output_dir / ("train_" + tag + ".csv"), train_log);
      save_qtable(qt, cfg.output_dir / ("qtable_" + tag + ".qtab"));

      const EvalSummary ev =
          evaluate(setup.model, setup.reward, &qt, shield, lc.eval_episodes,
                   setup.train_cfg.horizon, setup.initial, combo_seed,
                   cfg.threads == 0 ? 2 : cfg.threads);
      write_episode_csv(cfg.output_dir / ("eval_" + tag + ".csv"), ev.episodes);
      report_uncontrollable_starts(log, "train " + tag, train_log);
      report_uncontrollable_starts(log, "eval " + tag, ev.episodes);

      long train_violations = 0;
      for (const EpisodeResult& e : train_log) train_violations += e.violations;
      rows.push_back({space_name(space), lc.shields[si].label, ev.mean_return,
                      ev.total_violations + train_violations,
                      ev.uncontrollable_starts});
      log << "learn " << tag << ": mean return " << fmt("%.4f", ev.mean_return)
          << ", violations " << ev.total_violations + train_violations
          << " (train " << train_violations << " + eval " << ev.total_violations
          << ")";
      if (ev.uncontrollable_starts > 0)
        log << ", uncontrollable starts " << ev.uncontrollable_starts;
      log << "\n";
    }
  }

  const std::filesystem::path summary_path = cfg.output_dir / "learn_summary.csv";
  std::ofstream csv(summary_path, std::ios::trunc);
  if (!csv) throw io_error("cannot open '" + summary_path.string() + "' for writing");
  csv << "learning_space,shield,mean_return,violations,uncontrollable_starts\r\n";
  for (const SummaryRow& r : rows)
    csv << r.space << "," << r.shield << "," << fmt("%.6f", r.mean_return) << ","
        << r.violations << "," << r.uncontrollable << "\r\n";
  log << "summary written to " << summary_path.string() << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::filesystem::path& qtable_file,
             const std::optional<std::filesystem::path>& shield_file,
             const std::string& policy, int episodes,
             const std::filesystem::path& csv_out, std::ostream& log) {
  LearnSetup setup = make_learn_setup(cfg);

  std::optional<QTable> qt;
  if (policy == "greedy") {
    if (!std::filesystem::exists(qtable_file))
      throw config_error("qtable file '" + qtable_file.string() + "' does not exist");
    qt = load_qtable(qtable_file);
  } else if (policy != "random") {
    throw config_error("policy must be \"greedy\" or \"random\"");
  }
  std::optional<Strategy> shield;
  if (shield_file) {
    if (!std::filesystem::exists(*shield_file))
      throw config_error("shield file '" + shield_file->string() + "' does not exist");
    shield = load_strategy(*shield_file);
  }

  const int n = episodes > 0 ? episodes : cfg.learning.eval_episodes;
  const EvalSummary ev = evaluate(setup.model, setup.reward, qt ? &*qt : nullptr,
                                  shield ? &*shield : nullptr, n,
                                  setup.train_cfg.horizon, setup.initial, cfg.seed,
                                  cfg.threads == 0 ? 2 : cfg.threads);
  write_episode_csv(csv_out, ev.episodes);
  report_uncontrollable_starts(log, "eval", ev.episodes);
  log << "episodes: " << n << "\n"
      << "mean return: " << fmt("%.6f", ev.mean_return) << "\n"
      << "violations: " << ev.total_violations << "\n"
      << "uncontrollable starts: " << ev.uncontrollable_starts << "\n"
      << "kv episodes=" << n << " mean_return=" << fmt("%.6f", ev.mean_return)
      << " violations=" << ev.total_violations << "\n"
      << "results written to " << csv_out.string() << "\n";
  return kExitOk;
}

int cmd_rollout(const RunConfig& cfg, int steps,
                const std::filesystem::path& csv_out, std::ostream& log) {
  const ControlModel model = build_model(cfg);
  const Rollout r =
      random_rollout(model, steps, default_initial_sampler(model), cfg.seed);

  ensure_parent_dir(csv_out);
  std::ofstream csv(csv_out, std::ios::trunc);
  if (!csv) throw io_error("cannot open '" + csv_out.string() + "' for writing");
  csv << "step";
  for (int d = 0; d < model.dim; ++d) csv << ",x" << d;
  csv << ",action,unsafe\r\n";
  long unsafe_count = 0;
  for (std::size_t i = 0; i < r.states.size(); ++i) {
    csv << i;
    for (int d = 0; d < model.dim; ++d)
      csv << "," << fmt("%.10g", r.states[i][static_cast<std::size_t>(d)]);
    csv << "," << (i < r.actions.size() ? std::to_string(r.actions[i]) : "");
    csv << "," << (r.unsafe[i] ? 1 : 0) << "\r\n";
    unsafe_count += r.unsafe[i] ? 1 : 0;
  }
  log << "steps: " << steps << "\n"
      << "unsafe states: " << unsafe_count << "\n"
      << "kv steps=" << steps << " unsafe=" << unsafe_count << "\n"
      << "trajectory written to " << csv_out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Heatmap

namespace {

const char* mask_color(std::uint8_t mask) {
  static const char* palette[] = {"#4daf4a", "#377eb8", "#ff7f00", "#e41a1c",
                                  "#984ea3", "#a65628", "#f781bf", "#999999",
                                  "#66c2a5", "#fc8d62", "#8da0cb", "#e78ac3",
                                  "#a6d854", "#ffd92f", "#e5c494", "#b3b3b3"};
  if (mask == 0) return "#3b3b3b";
  return palette[(mask - 1) % 16];
}

std::pair<std::string, std::string> axis_labels(const Transform& tr) {
  if (tr.name == "polar") return {"theta", "r"};
  if (tr.name == "energy") return {"E", "v"};
  if (tr.name == "poly_offset") return {"theta", "z"};
  return {"x0", "x1"};
}

std::string mask_action_names(std::uint8_t mask,
                              const std::vector<std::string>& actions) {
  if (mask == 0) return "(unsafe)";
  std::string s = "{";
  for (std::size_t a = 0; a < actions.size(); ++a)
    if (mask_allows(mask, static_cast<int>(a))) {
      if (s.size() > 1) s += ", ";
      s += actions[a];
    }
  return s + "}";
}

}  // namespace

std::string render_heatmap_svg(const Strategy& st, int project_resolution) {
  if (st.grid.dim() != 2)
    throw config_error("heatmaps are only supported for 2-D shields");
  const bool project = project_resolution > 0;

  const Box& box = project ? st.transform.domain : st.grid.bounds();
  const std::uint32_t nx =
      project ? static_cast<std::uint32_t>(project_resolution) : st.grid.axis(0).count;
  const std::uint32_t ny =
      project ? static_cast<std::uint32_t>(project_resolution) : st.grid.axis(1).count;

  const double plot_w = 760.0, plot_h = 560.0;
  const double margin_l = 70.0, margin_b = 50.0, margin_t = 20.0, margin_r = 170.0;
  const double width = margin_l + plot_w + margin_r;
  const double height = margin_t + plot_h + margin_b;
  const double cw = plot_w / nx, ch = plot_h / ny;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height
      << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";

  std::vector<std::uint8_t> seen_masks(256, 0);
  for (std::uint32_t i = 0; i < nx; ++i) {
    for (std::uint32_t j = 0; j < ny; ++j) {
      std::uint8_t mask;
      if (project) {
        Vec s{box[0].lo + (box[0].hi - box[0].lo) * (i + 0.5) / nx,
              box[1].lo + (box[1].hi - box[1].lo) * (j + 0.5) / ny};
        mask = allowed_in_S(st, s);
      } else {
        mask = st.masks[st.grid.flatten(CellIndex{i, j})];
      }
      seen_masks[mask] = 1;
      const double x = margin_l + i * cw;
      const double y = margin_t + plot_h - (j + 1) * ch;  // j grows upward
      svg << "<rect x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", y)
          << "\" width=\"" << fmt("%.3f", cw) << "\" height=\"" << fmt("%.3f", ch)
          << "\" fill=\"" << mask_color(mask) << "\"/>\n";
    }
  }

  const auto [xlabel, ylabel] = axis_labels(st.transform);
  auto text = [&](double x, double y, const std::string& s, const char* anchor) {
    svg << "<text x=\"" << fmt("%.1f", x) << "\" y=\"" << fmt("%.1f", y)
        << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"" << anchor
        << "\">" << s << "</text>\n";
  };
  text(margin_l + plot_w / 2, height - 12, xlabel + (project ? " (original space)" : ""),
       "middle");
  svg << "<text x=\"18\" y=\"" << fmt("%.1f", margin_t + plot_h / 2)
      << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 "
      << fmt("%.1f", margin_t + plot_h / 2) << ")\">" << ylabel << "</text>\n";
  text(margin_l, height - 32, fmt("%.4g", box[0].lo), "middle");
  text(margin_l + plot_w, height - 32, fmt("%.4g", box[0].hi), "middle");
  text(margin_l - 8, margin_t + plot_h, fmt("%.4g", box[1].lo), "end");
  text(margin_l - 8, margin_t + 12, fmt("%.4g", box[1].hi), "end");

  double ly = margin_t + 10.0;
  for (int m = 0; m < 256; ++m) {
    if (!seen_masks[m]) continue;
    svg << "<rect x=\"" << fmt("%.1f", margin_l + plot_w + 16) << "\" y=\""
        << fmt("%.1f", ly) << "\" width=\"14\" height=\"14\" fill=\""
        << mask_color(static_cast<std::uint8_t>(m)) << "\"/>\n";
    text(margin_l + plot_w + 36, ly + 12,
         mask_action_names(static_cast<std::uint8_t>(m), st.actions), "start");
    ly += 22.0;
  }
  svg << "</svg>\n";
  return svg.str();
}

int cmd_heatmap(const std::filesystem::path& shield_file,
                const std::filesystem::path& svg_out, int project_resolution,
                std::ostream& log) {
  const Strategy st = load_strategy(shield_file);
  const std::string svg = render_heatmap_svg(st, project_resolution);
  ensure_parent_dir(svg_out);
  std::ofstream out(svg_out, std::ios::trunc);
  if (!out) throw io_error("cannot open '" + svg_out.string() + "' for writing");
  out << svg;
  log << "heatmap written to " << svg_out.string() << "\n";
  return kExitOk;
}

int cmd_info(const std::filesystem::path& file, std::ostream& log) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw io_error("cannot open '" + file.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  in.close();
  const std::string kind(magic, 4);

  auto print_common = [&](const GridSpec& grid, const std::vector<std::string>& actions,
                          const Transform& tr) {
    log << "grid:";
    for (int i = 0; i < grid.dim(); ++i)
      log << " [" << grid.axis(i).low << ", " << grid.axis(i).high << ")x"
          << grid.axis(i).count;
    log << " (" << grid.cell_count() << " cells)\n";
    log << "actions:";
    for (const std::string& a : actions) log << " " << a;
    log << "\ntransform: " << tr.name;
    if (!tr.params.empty()) {
      log << " (";
      for (std::size_t i = 0; i < tr.params.size(); ++i)
        log << (i ? ", " : "") << tr.params[i];
      log << ")";
    }
    log << "\n";
  };

  if (kind == "SHLD") {
    const Strategy st = load_strategy(file);
    log << "shield file\n";
    print_common(st.grid, st.actions, st.transform);
    log << "controllable cells: " << st.controllable_count() << "\n";
  } else if (kind == "SHTR") {
    const DecisionTree tree = load_tree(file);
    log << "decision tree file\n";
    print_common(tree.grid, tree.actions, tree.transform);
    log << "nodes: " << tree.node_count() << "\n";
  } else if (kind == "QTAB") {
    const QTable qt = load_qtable(file);
    log << "q-table file\n";
    print_common(qt.obs_grid, qt.actions, qt.space_transform);
    log << "learning space: " << (qt.space == LearnSpace::original ? "S" : "T") << "\n";
  } else {
    throw io_error("unrecognized file magic");
  }
  return kExitOk;
}

}  // namespace gridshield
