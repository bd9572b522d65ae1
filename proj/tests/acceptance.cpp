// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "gridshield/commands.hpp"
#include "gridshield/learn.hpp"
#include "gridshield/tree.hpp"

using namespace gridshield;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

void criterion(int id, const std::string& what, bool pass,
               const std::string& detail = "") {
  std::printf("%s criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", id, what.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

RunConfig load_config(const std::string& name) {
  RunConfig cfg = parse_config(fs::path(GS_CONFIG_DIR) / name);
  cfg.threads = 0;  // use all cores
  return cfg;
}

std::string fmt_seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2fs", s);
  return buf;
}

struct NamedShield {
  std::string name;
  SynthResult result;
};

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

// --------------------------------------------------------------------------

void run_criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  const SynthResult r = run_synth(load_config("oscillator_identity.json"));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  criterion(1, "oscillator/identity 4x4 fixpoint is empty",
            r.stats.controllable == 0 && secs < 1.0,
            "controllable=" + std::to_string(r.stats.controllable) + ", " +
                fmt_seconds(secs));
}

void run_criterion_2() {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig cfg = load_config("oscillator_polar.json");
  const ControlModel model = build_model(cfg);
  const Transform tr = build_transform(cfg, model);
  const GridSpec grid = build_grid(cfg);
  const TransitionTable tt = compute_transitions(model, tr, grid, cfg.sampling, 0);
  const SafeSet init = initial_safe(grid, tr, model.safety, cfg.sampling);
  const SafeSet safe = fixpoint(tt, init);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool layout_ok = true;
  for (std::size_t f = 0; f < grid.cell_count(); ++f) {
    const bool bottom = grid.unflatten(f)[1] == 0;
    if (safe.test(f) == bottom) layout_ok = false;
  }
  criterion(2, "oscillator/polar 4x4 fixpoint equals the initial marking",
            safe == init && layout_ok && secs < 1.0,
            "safe=" + std::to_string(safe.count()) + "/16, " + fmt_seconds(secs));
}

void run_criterion_3(SynthResult& bb_t, SynthResult& bb_s) {
  bb_t = run_synth(load_config("bouncing_ball_T.json"));
  bb_s = run_synth(load_config("bouncing_ball_S.json"));
  const bool ratio_ok =
      bb_s.stats.cells >= 100 * bb_t.stats.cells;
  criterion(3, "bouncing ball: transformed synthesis beats the original grid",
            bb_t.stats.controllable > 0 && bb_t.stats.seconds < 60.0 &&
                bb_s.stats.controllable > 0 && ratio_ok &&
                bb_s.stats.seconds > bb_t.stats.seconds,
            "T " + std::to_string(bb_t.stats.cells) + " cells in " +
                fmt_seconds(bb_t.stats.seconds) + ", S " +
                std::to_string(bb_s.stats.cells) + " cells in " +
                fmt_seconds(bb_s.stats.seconds));
}

void run_criterion_4(SynthResult& sat_t, SynthResult& sat_s) {
  sat_t = run_synth(load_config("satellite_T.json"));
  sat_s = run_synth(load_config("satellite_S.json"));

  bool top_row_forbids_out = true;
  const GridSpec& grid = sat_t.strategy.grid;
  const std::uint32_t top = grid.axis(1).count - 1;
  for (std::uint32_t i = 0; i < grid.axis(0).count; ++i) {
    const std::uint8_t mask = sat_t.strategy.masks[grid.flatten(CellIndex{i, top})];
    if (mask != 0 && mask_allows(mask, 1)) top_row_forbids_out = false;
  }
  criterion(4, "satellite: transformed synthesis beats the original grid",
            sat_t.stats.cells <= 30000 && sat_t.stats.controllable > 0 &&
                top_row_forbids_out && sat_s.stats.controllable > 0 &&
                sat_s.stats.seconds > sat_t.stats.seconds,
            "T " + std::to_string(sat_t.stats.cells) + " cells in " +
                fmt_seconds(sat_t.stats.seconds) + ", S " +
                std::to_string(sat_s.stats.cells) + " cells in " +
                fmt_seconds(sat_s.stats.seconds) +
                (top_row_forbids_out ? ", outer rim forbids out" : ", RIM LEAK"));
}

void run_criterion_5(SynthResult& cp_t) {
  // three bounded sweeps on the coarse 20x20 grid leave a nonempty marking
  RunConfig coarse_cfg = load_config("cart_pole_fit.json");
  for (GridAxis& a : coarse_cfg.grid_axes) a.count = 20;
  const SynthResult bounded = run_synth(coarse_cfg);

  const RunConfig fit_cfg = load_config("cart_pole_fit.json");
  const ControlModel model = build_model(fit_cfg);
  const Transform tr = build_transform(fit_cfg, model);
  const FitResult fit = run_fit(model, tr, build_grid(fit_cfg), fit_cfg.sampling,
                                fit_cfg.bounded_sweeps, fit_cfg.fit_powers, 0);

  cp_t = run_synth(load_config("cart_pole_T.json"));

  char detail[200];
  std::snprintf(detail, sizeof detail,
                "bounded 20x20 marking %zu cells, fit c1=%.4g c3=%.4g, "
                "transformed shield %zu cells",
                bounded.stats.controllable, fit.coefficients[0], fit.coefficients[1],
                cp_t.stats.controllable);
  criterion(5, "cart-pole: bounded marking, negative fit, transformed fixpoint",
            bounded.stats.controllable > 0 && fit.coefficients[0] < 0.0 &&
                fit.coefficients[1] < 0.0 && cp_t.stats.controllable > 0,
            detail);
}

struct SoundnessCheck {
  long step_failures = 0;
  long episode_violations = 0;
  long uncontrollable_starts = 0;
  long checked = 0;
};

SoundnessCheck single_step_checks(const ControlModel& model, const Strategy& st,
                                std::uint64_t seed, int count) {
  SoundnessCheck out;
  SplitMix64 rng(seed);
  const Box& box = st.transform.domain;
  while (out.checked < count) {
    Vec s(box.size());
    for (std::size_t d = 0; d < box.size(); ++d)
      s[d] = rng.uniform(box[d].lo, box[d].hi);
    std::uint8_t mask = 0;
    try {
      mask = allowed_in_S(st, s);
    } catch (const out_of_bounds&) {
      continue;
    }
    if (mask == 0) continue;

    boost::container::small_vector<int, 8> allowed;
    for (int a = 0; a < static_cast<int>(model.actions.size()); ++a)
      if (mask_allows(mask, a)) allowed.push_back(a);
    const int action = allowed[rng.uniform_int(static_cast<std::uint32_t>(allowed.size()))];

    Vec u(static_cast<std::size_t>(model.disturbance_arity));
    for (double& x : u) x = rng.uniform01();
    const Vec next = model.step(s, action, as_span(u));
    ++out.checked;
    try {
      if (allowed_in_S(st, next) == 0) ++out.step_failures;
    } catch (const out_of_bounds&) {
      ++out.step_failures;
    }
  }
  return out;
}

void run_criterion_6(const Strategy& bb_t, const Strategy& sat_t, const Strategy& cp_t) {
  SoundnessCheck total;
  std::string detail;

  struct Case {
    const char* name;
    ControlModel model;        // shield-space model for single steps
    ControlModel episode_model;  // full model for shielded episodes
    RewardModel reward;
    const Strategy* shield;
    int horizon;
  };
  const CartPoleParams pole_only{.pole_only = true};
  std::vector<Case> cases;
  cases.push_back({"bouncing_ball", make_bouncing_ball(), make_bouncing_ball(),
                   make_bouncing_ball_reward(), &bb_t, 1200});
  cases.push_back({"satellite", make_satellite(), make_satellite(),
                   make_satellite_reward(), &sat_t, 2400});
  cases.push_back({"cart_pole", make_cart_pole(pole_only), make_cart_pole(),
                   make_cart_pole_reward(), &cp_t, 500});

  for (const Case& c : cases) {
    const SoundnessCheck steps = single_step_checks(c.model, *c.shield, 1234, 10000);
    const EvalSummary ep =
        evaluate(c.episode_model, c.reward, nullptr, c.shield, 1000, c.horizon,
                 default_initial_sampler(c.episode_model), 0, 2);
    total.step_failures += steps.step_failures;
    total.episode_violations += ep.total_violations;
    total.uncontrollable_starts += ep.uncontrollable_starts;
    detail += std::string(c.name) + " steps " + std::to_string(steps.step_failures) +
              "/10000 bad, episodes " + std::to_string(ep.total_violations) +
              " violations, " + std::to_string(ep.uncontrollable_starts) +
              " uncontrollable starts; ";
  }
  criterion(6, "single-step and 1000-episode shielded safety checks",
            total.step_failures == 0 && total.episode_violations == 0 &&
                total.uncontrollable_starts == 0,
            detail);
}

void run_criterion_7(const std::vector<NamedShield>& shields) {
  bool all_ok = true;
  std::string detail;
  for (const NamedShield& ns : shields) {
    const Strategy& st = ns.result.strategy;
    const DecisionTree tree = to_tree(st);
    bool equivalent = true;
    for (std::size_t f = 0; f < st.grid.cell_count(); ++f) {
      if (tree.evaluate(st.grid.cell_center(st.grid.unflatten(f))) != st.masks[f]) {
        equivalent = false;
        break;
      }
    }
    const bool compressed = tree.node_count() * 5 <= st.grid.cell_count();
    all_ok = all_ok && equivalent && compressed;
    detail += ns.name + " " + std::to_string(st.grid.cell_count()) + "->" +
              std::to_string(tree.node_count()) + " nodes" +
              (equivalent ? "" : " INEQUIVALENT") + "; ";
  }
  criterion(7, "decision trees are exact and at least 5x smaller", all_ok, detail);
}

void run_criterion_8(const fs::path& outdir) {
  bool all_ok = true;
  std::string detail;

  struct MatrixCase {
    const char* config;
    const char* s_shield;
    const char* t_shield;
  };
  const MatrixCase cases[] = {
      {"learn_bouncing_ball.json", "bouncing_ball_S.shield", "bouncing_ball_T.shield"},
      {"learn_satellite.json", "satellite_S.shield", "satellite_T.shield"},
      {"learn_cart_pole.json", "cart_pole_S.shield", "cart_pole_T.shield"},
  };

  for (const MatrixCase& mc : cases) {
    RunConfig cfg = load_config(mc.config);
    cfg.learning.episodes = 150;
    cfg.learning.eval_episodes = 100;
    cfg.learning.shields = {{"none", ""},
                            {"S", (outdir / mc.s_shield).string()},
                            {"T", (outdir / mc.t_shield).string()}};
    cfg.output_dir = outdir / (std::string("matrix_") + mc.config);
    std::ostringstream log;
    cmd_learn(cfg, log);

    // shielded matrix cells must be violation-free
    std::ifstream in(cfg.output_dir / "learn_summary.csv");
    std::string line;
    std::getline(in, line);  // header
    long shielded_violations = -1;
    int rows = 0;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string space, shield, ret, viol, unc;
      std::getline(ss, space, ',');
      std::getline(ss, shield, ',');
      std::getline(ss, ret, ',');
      std::getline(ss, viol, ',');
      std::getline(ss, unc, ',');
      ++rows;
      if (shield != "none") {
        if (shielded_violations < 0) shielded_violations = 0;
        shielded_violations += std::stol(viol);
      }
    }
    const bool ok = rows == 6 && shielded_violations == 0;
    all_ok = all_ok && ok;
    detail += std::string(mc.config) + (ok ? " ok; " : " FAILED; ");
  }

  // byte-determinism of a full matrix run
  {
    RunConfig cfg = load_config("learn_bouncing_ball.json");
    cfg.learning.episodes = 30;
    cfg.learning.eval_episodes = 30;
    cfg.learning.shields = {{"none", ""},
                            {"T", (outdir / "bouncing_ball_T.shield").string()}};
    std::ostringstream log;
    cfg.output_dir = outdir / "det_a";
    cmd_learn(cfg, log);
    cfg.output_dir = outdir / "det_b";
    cmd_learn(cfg, log);
    bool identical = true;
    for (const auto& entry : fs::directory_iterator(outdir / "det_a")) {
      const fs::path other = outdir / "det_b" / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) identical = false;
    }
    all_ok = all_ok && identical;
    detail += identical ? "byte-deterministic; " : "NONDETERMINISTIC; ";
  }

  // unshielded random baseline on the bouncing ball violates
  {
    const ControlModel bb = make_bouncing_ball();
    const RewardModel rw = make_bouncing_ball_reward();
    const EvalSummary ev = evaluate(bb, rw, nullptr, nullptr, 1000, 1200,
                                    default_initial_sampler(bb), 0, 2);
    const bool ok = ev.total_violations > 0;
    all_ok = all_ok && ok;
    detail += "random baseline " + std::to_string(ev.total_violations) + " violations";
  }

  criterion(8, "shielded learning matrix runs clean and deterministically", all_ok,
            detail);
}

void run_criterion_9(const Strategy& bb_t, const fs::path& outdir) {
  std::string failures;
  SplitMix64 rng(2024);

  // partition property
  {
    const GridSpec g({{-1.5, 2.5, 7}, {0.0, 1.0, 3}});
    for (int i = 0; i < 1000; ++i) {
      const Vec p{rng.uniform(-1.5, 2.5), rng.uniform(0.0, 1.0)};
      const CellIndex c = g.cell_of(p);
      if (!box_contains(g.cell_box(c), p)) failures += "partition ";
    }
  }
  // inner/outer duality
  {
    const GridSpec g({{-2.0, 2.0, 5}, {-2.0, 2.0, 5}});
    for (int k = 0; k < 25; ++k) {
      const Region r = Region::disc(Vec{rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                    rng.uniform(0.2, 1.5));
      const auto in = inner_cells(g, r);
      const auto out_c = outer_cells(g, Region::complement(r));
      std::vector<std::size_t> expect;
      for (std::size_t f = 0; f < g.cell_count(); ++f)
        if (std::find(out_c.begin(), out_c.end(), f) == out_c.end())
          expect.push_back(f);
      if (in != expect) {
        failures += "duality ";
        break;
      }
    }
  }
  // fixpoint monotonicity and order independence (naive resweep oracle)
  {
    const ControlModel bb = make_bouncing_ball();
    const Transform en = energy_transform(bb.bounds, 1.0, 9.81, 100.0);
    const GridSpec grid({{0.0, 100.0, 13}, {-13.0, 13.0, 13}});
    SamplingConfig cfg;
    cfg.points_per_axis = 3;
    const TransitionTable tt = compute_transitions(bb, en, grid, cfg, 0);
    const SafeSet init = initial_safe(grid, en, bb.safety, cfg);
    const SafeSet fp = fixpoint(tt, init);

    SafeSet naive = init;
    bool changed = true;
    while (changed) {
      changed = false;
      SafeSet next = naive;
      for (std::size_t c = 0; c < tt.n_cells(); ++c) {
        if (!naive.test(c)) continue;
        bool any = false;
        for (int a = 0; a < tt.n_actions() && !any; ++a) {
          if (tt.escapes(c, a)) continue;
          bool ok = true;
          for (std::uint32_t s : tt.successors(c, a))
            if (!naive.test(s)) ok = false;
          any = ok;
        }
        if (!any) {
          next.set(c, false);
          changed = true;
        }
      }
      naive = next;
    }
    if (!(fp == naive)) failures += "order-independence ";

    SafeSet smaller = init;
    for (std::size_t f = 0; f < grid.cell_count(); ++f)
      if (smaller.test(f) && rng.uniform01() < 0.25) smaller.set(f, false);
    const SafeSet fp_small = fixpoint(tt, smaller);
    for (std::size_t f = 0; f < grid.cell_count(); ++f)
      if (fp_small.test(f) && !fp.test(f)) failures += "monotonicity ";
  }
  // transform round trips + pointwise successor consistency
  {
    const Transform polar = polar_transform(Box{{-2, 2}, {-2, 2}}, 2.0);
    const Transform en = energy_transform(Box{{-13, 13}, {0, 8}}, 1.0, 9.81, 100.0);
    const Transform po =
        poly_offset_transform(Box{{-2.095, 2.095}, {-3, 3}}, {-4.5508, -141.6953});
    auto check_rt = [&](const Transform& tr, const Vec& s) {
      const Preimage back = tr.inverse(tr.forward(s));
      if (back.size() != 1) return false;
      for (std::size_t d = 0; d < s.size(); ++d)
        if (std::abs(back[0][d] - s[d]) > 1e-9) return false;
      return true;
    };
    for (int i = 0; i < 10000; ++i) {
      if (!check_rt(polar, Vec{rng.uniform(-1.9, 1.9), rng.uniform(-1.9, 1.9)}) ||
          !check_rt(en, Vec{rng.uniform(-12.9, 12.9), rng.uniform(0.01, 7.9)}) ||
          !check_rt(po, Vec{rng.uniform(-2.0, 2.0), rng.uniform(-2.9, 2.9)})) {
        failures += "round-trip ";
        break;
      }
    }
    const ControlModel sat = make_satellite();
    for (int i = 0; i < 1000; ++i) {
      Vec s{rng.uniform(-1.4, 1.4), rng.uniform(-1.4, 1.4)};
      if (std::hypot(s[0], s[1]) < 1e-3) continue;
      const int a = static_cast<int>(rng.uniform_int(3));
      const Vec direct = polar.forward(sat.step(s, a, {}));
      const auto succ = transformed_successor(sat, polar, polar.forward(s), a, {});
      if (succ.size() != 1 || std::abs(succ[0][0] - direct[0]) > 1e-9 ||
          std::abs(succ[0][1] - direct[1]) > 1e-9) {
        failures += "successor-consistency ";
        break;
      }
    }
  }
  // free-fall energy conservation
  {
    const ControlModel bb = make_bouncing_ball();
    int checked = 0;
    while (checked < 1000) {
      const Vec s{rng.uniform(-5, 5), rng.uniform(4, 8)};
      const double t_hit =
          (s[0] + std::sqrt(s[0] * s[0] + 2 * 9.81 * s[1])) / 9.81;
      if (t_hit < 0.1) continue;
      const double u[] = {rng.uniform01()};
      const Vec n = bb.step(s, 0, std::span<const double>(u, 1));
      const double e0 = 9.81 * s[1] + 0.5 * s[0] * s[0];
      const double e1 = 9.81 * n[1] + 0.5 * n[0] * n[0];
      if (std::abs(e0 - e1) > 1e-9 * std::max(1.0, e0)) {
        failures += "energy ";
        break;
      }
      ++checked;
    }
  }
  // save/load byte-exactness
  {
    const fs::path p1 = outdir / "rt_a.shield";
    const fs::path p2 = outdir / "rt_b.shield";
    save_strategy(bb_t, p1);
    save_strategy(load_strategy(p1), p2);
    if (slurp(p1) != slurp(p2)) failures += "save-load ";
  }

  criterion(9, "module property suites",
            failures.empty(), failures.empty() ? "all properties hold" : failures);
}

}  // namespace

int main() {
  const auto suite_start = std::chrono::steady_clock::now();
  const fs::path outdir = fs::temp_directory_path() / "gridshield_acceptance";
  fs::create_directories(outdir);

  run_criterion_1();
  run_criterion_2();

  SynthResult bb_t, bb_s, sat_t, sat_s, cp_t;
  run_criterion_3(bb_t, bb_s);
  run_criterion_4(sat_t, sat_s);
  run_criterion_5(cp_t);

  // cart-pole original-space shield for the learning matrix
  const SynthResult cp_s = run_synth(load_config("cart_pole_S.json"));

  save_strategy(bb_t.strategy, outdir / "bouncing_ball_T.shield");
  save_strategy(bb_s.strategy, outdir / "bouncing_ball_S.shield");
  save_strategy(sat_t.strategy, outdir / "satellite_T.shield");
  save_strategy(sat_s.strategy, outdir / "satellite_S.shield");
  save_strategy(cp_t.strategy, outdir / "cart_pole_T.shield");
  save_strategy(cp_s.strategy, outdir / "cart_pole_S.shield");

  run_criterion_6(bb_t.strategy, sat_t.strategy, cp_t.strategy);
  run_criterion_7({{"bouncing_ball_T", bb_t}, {"satellite_T", sat_t},
                   {"cart_pole_T", cp_t}});
  run_criterion_8(outdir);
  run_criterion_9(bb_t.strategy, outdir);

  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - suite_start)
          .count();
  std::printf("%d/9 criteria passed in %s\n", 9 - g_failures,
              fmt_seconds(total).c_str());
  return g_failures == 0 ? 0 : 1;
}
