#include "gridshield/learn.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "gridshield/serialize.hpp"

namespace gridshield {

std::uint8_t shield_mask(const ControlModel& model, const Strategy& shield,
                         const Vec& s) {
  Vec proj;
  if (model.shield_dims.empty()) {
    proj = s;
  } else {
    proj.reserve(model.shield_dims.size());
    for (int d : model.shield_dims) proj.push_back(s[static_cast<std::size_t>(d)]);
  }
  if (!box_contains(shield.transform.domain, proj)) return 0;
  return allowed_in_S(shield, proj);
}

Vec observe(const ControlModel& model, LearnSpace space, const Transform& tr,
            const Vec& s) {
  (void)model;
  if (space == LearnSpace::original) return s;
  const std::size_t td = tr.domain.size();
  Vec head(s.begin(), s.begin() + td);
  Vec obs = tr.forward(head);
  for (std::size_t i = td; i < s.size(); ++i) obs.push_back(s[i]);
  return obs;
}

namespace {

std::size_t obs_cell(const GridSpec& grid, const Vec& obs) {
  // Observations may leave the observation box (unshielded exploration);
  // clamp them to the boundary cells.
  Vec clamped = obs;
  for (int i = 0; i < grid.dim(); ++i) {
    const GridAxis& a = grid.axis(i);
    const double hi = a.high - 1e-9 * (a.high - a.low);
    clamped[i] = std::clamp(clamped[i], a.low, hi);
  }
  return grid.flatten(grid.cell_of(clamped));
}

Vec draw_disturbance(int arity, SplitMix64& rng) {
  Vec u(static_cast<std::size_t>(arity));
  for (int i = 0; i < arity; ++i) u[i] = rng.uniform01();
  return u;
}

int argmax_q(const QTable& qt, std::size_t cell, std::uint8_t mask) {
  int best = -1;
  double best_v = 0.0;
  for (int a = 0; a < static_cast<int>(qt.actions.size()); ++a) {
    if (!mask_allows(mask, a)) continue;
    const double v = qt.value(cell, a);
    if (best < 0 || v > best_v) {
      best = a;
      best_v = v;
    }
  }
  return best;
}

int pick_uniform(std::uint8_t mask, int n_actions, SplitMix64& rng) {
  boost::container::small_vector<int, 8> opts;
  for (int a = 0; a < n_actions; ++a)
    if (mask_allows(mask, a)) opts.push_back(a);
  if (opts.empty()) return -1;
  return opts[rng.uniform_int(static_cast<std::uint32_t>(opts.size()))];
}

constexpr std::uint64_t kTrainStream = 0x747261696eULL;
constexpr std::uint64_t kEvalStream = 0x6576616cULL;

}  // namespace

QTable train(const ControlModel& model, const RewardModel& reward,
             const Strategy* shield, LearnSpace space, const Transform& space_tr,
             const GridSpec& obs_grid, const TrainConfig& cfg,
             const InitialSampler& initial, std::uint64_t seed,
             std::vector<EpisodeResult>* log) {
  const int n_actions = static_cast<int>(model.actions.size());
  const std::uint8_t all_mask = static_cast<std::uint8_t>((1u << n_actions) - 1u);

  QTable qt;
  qt.obs_grid = obs_grid;
  qt.actions = model.actions;
  qt.space = space;
  qt.space_transform = space_tr;
  qt.q.assign(obs_grid.cell_count() * static_cast<std::size_t>(n_actions), 0.0);

  const int anneal =
      std::max(1, static_cast<int>(cfg.eps_fraction * cfg.episodes));
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    const std::uint64_t ep_seed = mix_seed(seed, kTrainStream, ep);
    SplitMix64 rng(ep_seed);
    EpisodeResult result;
    result.episode = ep;
    result.seed = ep_seed;

    Vec s = initial(rng);
    reward.begin(s, rng);

    const double eps =
        ep >= anneal ? cfg.eps_end
                     : cfg.eps_start +
                           (cfg.eps_end - cfg.eps_start) * (static_cast<double>(ep) / anneal);

    if (shield && shield_mask(model, *shield, s) == 0) {
      result.uncontrollable_start = true;
      if (log) log->push_back(result);
      continue;
    }

    for (int step = 0; step < cfg.horizon; ++step) {
      const std::uint8_t mask = shield ? shield_mask(model, *shield, s) : all_mask;
      if (mask == 0) break;  // uncontrollable under the shield; cannot act

      const std::size_t cell = obs_cell(obs_grid, observe(model, space, space_tr, s));
      int a;
      if (rng.uniform01() < eps) {
        a = pick_uniform(mask, n_actions, rng);
      } else {
        a = argmax_q(qt, cell, mask);
      }

      const Vec u = draw_disturbance(model.disturbance_arity, rng);
      Vec next = model.step(s, a, as_span(u));
      const double r = reward.step(s, a, next, rng);
      const bool violated = !model.safety.contains(next);

      const double r_int = reward.maximize ? r : -r;
      double bootstrap = 0.0;
      if (!violated) {
        const std::uint8_t next_mask =
            shield ? shield_mask(model, *shield, next) : all_mask;
        if (next_mask != 0) {
          const std::size_t next_cell =
              obs_cell(obs_grid, observe(model, space, space_tr, next));
          const int best = argmax_q(qt, next_cell, next_mask);
          bootstrap = qt.value(next_cell, best);
        }
      }
      double& qv = qt.q[cell * static_cast<std::size_t>(n_actions) + a];
      qv += cfg.alpha * (r_int + cfg.gamma * bootstrap - qv);

      result.ret += r;
      ++result.steps;
      if (violated) {
        ++result.violations;
        break;
      }
      s = std::move(next);
    }
    if (log) log->push_back(result);
  }
  return qt;
}

namespace {

EpisodeResult run_episode(const ControlModel& model, const RewardModel& reward,
                          const QTable* policy, const Strategy* shield,
                          int episode, int horizon, const InitialSampler& initial,
                          std::uint64_t seed) {
  const int n_actions = static_cast<int>(model.actions.size());
  const std::uint8_t all_mask = static_cast<std::uint8_t>((1u << n_actions) - 1u);
  const std::uint64_t ep_seed = mix_seed(seed, kEvalStream, episode);
  SplitMix64 rng(ep_seed);

  EpisodeResult result;
  result.episode = episode;
  result.seed = ep_seed;

  Vec s = initial(rng);
  reward.begin(s, rng);
  if (shield && shield_mask(model, *shield, s) == 0) {
    result.uncontrollable_start = true;
    return result;
  }

  for (int step = 0; step < horizon; ++step) {
    // Propose greedily (or uniformly at random), then let the shield
    // replace disallowed proposals.
    int a;
    if (policy) {
      const std::size_t cell = obs_cell(
          policy->obs_grid, observe(model, policy->space, policy->space_transform, s));
      a = argmax_q(*policy, cell, all_mask);
    } else {
      a = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(n_actions)));
    }
    if (shield) {
      const std::uint8_t mask = shield_mask(model, *shield, s);
      if (mask == 0) break;
      if (!mask_allows(mask, a)) a = lowest_action(mask);
    }

    const Vec u = draw_disturbance(model.disturbance_arity, rng);
    Vec next = model.step(s, a, as_span(u));
    result.ret += reward.step(s, a, next, rng);
    ++result.steps;
    if (!model.safety.contains(next)) {
      ++result.violations;
      break;
    }
    s = std::move(next);
  }
  return result;
}

}  // namespace

EvalSummary evaluate(const ControlModel& model, const RewardModel& reward,
                     const QTable* policy, const Strategy* shield, int episodes,
                     int horizon, const InitialSampler& initial,
                     std::uint64_t seed, int threads) {
  EvalSummary summary;
  summary.episodes.resize(static_cast<std::size_t>(episodes));

  auto work = [&](int begin, int end, const RewardModel& rm) {
    for (int ep = begin; ep < end; ++ep)
      summary.episodes[static_cast<std::size_t>(ep)] =
          run_episode(model, rm, policy, shield, ep, horizon, initial, seed);
  };

  if (threads <= 1 || episodes < 8) {
    work(0, episodes, reward);
  } else {
    // Each worker needs an independent reward instance: reward models carry
    // episode-local state that plain copies would share.
    const int n = std::min(threads, 32);
    std::vector<std::thread> pool;
    std::vector<RewardModel> rewards;
    rewards.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rewards.push_back(reward.fresh());
    const int chunk = (episodes + n - 1) / n;
    for (int i = 0; i < n; ++i) {
      const int b = std::min(episodes, i * chunk);
      const int e = std::min(episodes, b + chunk);
      if (b < e)
        pool.emplace_back([&, b, e, i] { work(b, e, rewards[static_cast<std::size_t>(i)]); });
    }
    for (auto& t : pool) t.join();
  }

  double sum = 0.0;
  for (const EpisodeResult& r : summary.episodes) {
    sum += r.ret;
    summary.total_violations += r.violations;
    summary.uncontrollable_starts += r.uncontrollable_start ? 1 : 0;
  }
  summary.mean_return = episodes > 0 ? sum / episodes : 0.0;
  return summary;
}

Rollout random_rollout(const ControlModel& model, int steps,
                       const InitialSampler& initial, std::uint64_t seed) {
  SplitMix64 rng(mix_seed(seed, 0x726f6cULL, 0));
  Rollout out;
  Vec s = initial(rng);
  out.states.push_back(s);
  out.unsafe.push_back(!model.safety.contains(s));
  for (int i = 0; i < steps; ++i) {
    const int a =
        static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(model.actions.size())));
    const Vec u = draw_disturbance(model.disturbance_arity, rng);
    s = model.step(s, a, as_span(u));
    out.actions.push_back(a);
    out.states.push_back(s);
    out.unsafe.push_back(!model.safety.contains(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kQTableMagic[4] = {'Q', 'T', 'A', 'B'};
}

void save_qtable(const QTable& qt, const std::filesystem::path& path) {
  detail::Writer w(path);
  detail::write_header(w, kQTableMagic, qt.obs_grid, qt.actions, qt.space_transform);
  w.u8(qt.space == LearnSpace::transformed ? 1 : 0);
  for (double v : qt.q) w.f64(v);
  w.finish();
}

QTable load_qtable(const std::filesystem::path& path) {
  detail::Reader r(path);
  detail::Header h = detail::read_header(r, kQTableMagic);
  QTable qt;
  qt.obs_grid = std::move(h.grid);
  qt.actions = std::move(h.actions);
  qt.space_transform = std::move(h.transform);
  qt.space = r.u8() ? LearnSpace::transformed : LearnSpace::original;
  qt.q.resize(qt.obs_grid.cell_count() * qt.actions.size());
  for (double& v : qt.q) v = r.f64();
  r.expect_eof("corrupt file: trailing data after value array");
  return qt;
}

}  // namespace gridshield
