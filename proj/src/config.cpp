#include "gridshield/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace gridshield {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw config_error(path + ": " + message);
}

const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

/// Grid bounds accept numbers or the strings "pi"/"-pi", so half-open
/// angle boxes can be written exactly.
double parse_bound(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "pi") return std::numbers::pi;
    if (s == "-pi") return -std::numbers::pi;
    fail(path, "expected a number or \"pi\"/\"-pi\", got \"" + s + "\"");
  }
  fail(path, "expected a number");
}

double get_number(const json& j, const std::string& key, double fallback,
                  const std::string& path) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(path + "." + key, "expected a number");
  return v->get<double>();
}

int get_int(const json& j, const std::string& key, int fallback,
            const std::string& path) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(path + "." + key, "expected an integer");
  return v->get<int>();
}

bool get_bool(const json& j, const std::string& key, bool fallback,
              const std::string& path) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(path + "." + key, "expected a boolean");
  return v->get<bool>();
}

std::string get_string(const json& j, const std::string& key,
                       const std::string& fallback, const std::string& path) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(path + "." + key, "expected a string");
  return v->get<std::string>();
}

std::vector<GridAxis> parse_grid_axes(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of axes");
  std::vector<GridAxis> axes;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const json& a = j[i];
    if (!a.is_object()) fail(p, "expected an object {low, high, count}");
    GridAxis axis;
    const json* lo = find(a, "low");
    const json* hi = find(a, "high");
    if (!lo) fail(p + ".low", "missing");
    if (!hi) fail(p + ".high", "missing");
    axis.low = parse_bound(*lo, p + ".low");
    axis.high = parse_bound(*hi, p + ".high");
    const int count = get_int(a, "count", 0, p);
    if (count <= 0) fail(p + ".count", "must be a positive integer");
    axis.count = static_cast<std::uint32_t>(count);
    if (!(axis.low < axis.high)) fail(p, "low must be < high");
    axes.push_back(axis);
  }
  return axes;
}

}  // namespace

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw config_error("config file '" + path.string() + "': " + e.what());
  }
  return parse_config(j);
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) throw config_error("config root must be an object");
  RunConfig cfg;

  const json* seed = find(j, "seed");
  if (seed) {
    if (!seed->is_number_integer() || seed->get<std::int64_t>() < 0)
      fail("seed", "expected a non-negative integer");
    cfg.seed = seed->get<std::uint64_t>();
  }
  cfg.threads = get_int(j, "threads", 0, "");

  const json* model = find(j, "model");
  if (!model || !model->is_object()) fail("model", "missing or not an object");
  cfg.model_name = get_string(*model, "name", "", "model");
  if (cfg.model_name.empty()) fail("model.name", "missing");
  if (const json* p = find(*model, "params")) {
    if (!p->is_object()) fail("model.params", "expected an object");
    cfg.model_params = *p;
  }

  if (const json* tr = find(j, "transform")) {
    if (!tr->is_object()) fail("transform", "expected an object");
    cfg.transform_name = get_string(*tr, "name", "identity", "transform");
    if (const json* p = find(*tr, "params")) {
      if (!p->is_object()) fail("transform.params", "expected an object");
      cfg.transform_params = *p;
    }
  }

  if (const json* g = find(j, "grid")) cfg.grid_axes = parse_grid_axes(*g, "grid");

  if (const json* s = find(j, "sampling")) {
    if (!s->is_object()) fail("sampling", "expected an object");
    cfg.sampling.points_per_axis = get_int(*s, "points_per_axis", 4, "sampling");
    cfg.sampling.random_disturbances =
        get_int(*s, "random_disturbances", 2, "sampling");
    if (cfg.sampling.points_per_axis < 1)
      fail("sampling.points_per_axis", "must be >= 1");
    if (cfg.sampling.random_disturbances < 0)
      fail("sampling.random_disturbances", "must be >= 0");
  }
  cfg.sampling.seed = cfg.seed;

  if (const json* s = find(j, "synthesis")) {
    if (!s->is_object()) fail("synthesis", "expected an object");
    const std::string mode = get_string(*s, "mode", "fixpoint", "synthesis");
    if (mode == "fixpoint") {
      cfg.synth_mode = SynthMode::fixpoint;
    } else if (mode == "bounded") {
      cfg.synth_mode = SynthMode::bounded;
      cfg.bounded_sweeps = get_int(*s, "sweeps", 3, "synthesis");
      if (cfg.bounded_sweeps < 0) fail("synthesis.sweeps", "must be >= 0");
    } else {
      fail("synthesis.mode", "expected \"fixpoint\" or \"bounded\"");
    }
  }

  if (const json* f = find(j, "fit")) {
    if (!f->is_object()) fail("fit", "expected an object");
    if (const json* p = find(*f, "powers")) {
      if (!p->is_array() || p->empty()) fail("fit.powers", "expected a non-empty array");
      cfg.fit_powers.clear();
      for (std::size_t i = 0; i < p->size(); ++i) {
        if (!(*p)[i].is_number_integer())
          fail("fit.powers[" + std::to_string(i) + "]", "expected an integer");
        const int pw = (*p)[i].get<int>();
        if (pw < 1 || pw % 2 == 0)
          fail("fit.powers[" + std::to_string(i) + "]", "expected an odd power >= 1");
        cfg.fit_powers.push_back(pw);
      }
    }
  }

  if (const json* l = find(j, "learning")) {
    if (!l->is_object()) fail("learning", "expected an object");
    LearningConfig& lc = cfg.learning;
    if (const json* sp = find(*l, "spaces")) {
      if (!sp->is_array() || sp->empty())
        fail("learning.spaces", "expected a non-empty array");
      lc.spaces.clear();
      for (std::size_t i = 0; i < sp->size(); ++i) {
        const std::string s = (*sp)[i].is_string() ? (*sp)[i].get<std::string>() : "";
        if (s == "S")
          lc.spaces.push_back(LearnSpace::original);
        else if (s == "T")
          lc.spaces.push_back(LearnSpace::transformed);
        else
          fail("learning.spaces[" + std::to_string(i) + "]", "expected \"S\" or \"T\"");
      }
    }
    if (const json* sh = find(*l, "shields")) {
      if (!sh->is_array() || sh->empty())
        fail("learning.shields", "expected a non-empty array");
      lc.shields.clear();
      for (std::size_t i = 0; i < sh->size(); ++i) {
        const std::string p = "learning.shields[" + std::to_string(i) + "]";
        if (!(*sh)[i].is_object()) fail(p, "expected an object");
        ShieldRef ref;
        ref.label = get_string((*sh)[i], "label", "", p);
        ref.file = get_string((*sh)[i], "file", "", p);
        if (ref.label.empty()) fail(p + ".label", "missing");
        if (ref.label != "none" && ref.file.empty())
          fail(p + ".file", "missing shield file path");
        lc.shields.push_back(std::move(ref));
      }
    }
    lc.episodes = get_int(*l, "episodes", lc.episodes, "learning");
    lc.eval_episodes = get_int(*l, "eval_episodes", lc.eval_episodes, "learning");
    lc.horizon_seconds =
        get_number(*l, "horizon_seconds", lc.horizon_seconds, "learning");
    lc.alpha = get_number(*l, "alpha", lc.alpha, "learning");
    lc.gamma = get_number(*l, "gamma", lc.gamma, "learning");
    if (const json* e = find(*l, "epsilon")) {
      if (!e->is_object()) fail("learning.epsilon", "expected an object");
      lc.eps_start = get_number(*e, "start", lc.eps_start, "learning.epsilon");
      lc.eps_end = get_number(*e, "end", lc.eps_end, "learning.epsilon");
      lc.eps_fraction =
          get_number(*e, "fraction", lc.eps_fraction, "learning.epsilon");
    }
    if (const json* og = find(*l, "observation_grid"))
      lc.observation_grid = parse_grid_axes(*og, "learning.observation_grid");
    if (lc.episodes < 0) fail("learning.episodes", "must be >= 0");
    if (lc.eval_episodes < 0) fail("learning.eval_episodes", "must be >= 0");
  }

  if (const json* o = find(j, "output_dir")) {
    if (!o->is_string()) fail("output_dir", "expected a string");
    cfg.output_dir = o->get<std::string>();
  }
  return cfg;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<SatelliteDisc> parse_obstacles(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of [x, y, radius] triples");
  std::vector<SatelliteDisc> obs;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!j[i].is_array() || j[i].size() != 3) fail(p, "expected [x, y, radius]");
    obs.push_back({j[i][0].get<double>(), j[i][1].get<double>(),
                   j[i][2].get<double>()});
  }
  return obs;
}

SatelliteParams satellite_params(const RunConfig& cfg) {
  const json& p = cfg.model_params;
  SatelliteParams sp;
  sp.period = get_number(p, "period", sp.period, "model.params");
  sp.out_factor = get_number(p, "out_factor", sp.out_factor, "model.params");
  sp.in_factor = get_number(p, "in_factor", sp.in_factor, "model.params");
  sp.max_radius = get_number(p, "max_radius", sp.max_radius, "model.params");
  sp.destination_radius =
      get_number(p, "destination_radius", sp.destination_radius, "model.params");
  if (const json* o = find(p, "obstacles"))
    sp.obstacles = parse_obstacles(*o, "model.params.obstacles");
  return sp;
}

BouncingBallParams bouncing_ball_params(const RunConfig& cfg) {
  const json& p = cfg.model_params;
  const std::string at = "model.params";
  BouncingBallParams bp;
  bp.gravity = get_number(p, "gravity", bp.gravity, at);
  bp.mass = get_number(p, "mass", bp.mass, at);
  bp.period = get_number(p, "period", bp.period, at);
  bp.hit_min_height = get_number(p, "hit_min_height", bp.hit_min_height, at);
  bp.hit_impulse = get_number(p, "hit_impulse", bp.hit_impulse, at);
  bp.damp_min = get_number(p, "damp_min", bp.damp_min, at);
  bp.damp_span = get_number(p, "damp_span", bp.damp_span, at);
  bp.unsafe_speed = get_number(p, "unsafe_speed", bp.unsafe_speed, at);
  bp.unsafe_height = get_number(p, "unsafe_height", bp.unsafe_height, at);
  bp.v_min = get_number(p, "v_min", bp.v_min, at);
  bp.v_max = get_number(p, "v_max", bp.v_max, at);
  bp.p_max = get_number(p, "p_max", bp.p_max, at);
  return bp;
}

CartPoleParams cart_pole_params(const RunConfig& cfg) {
  const json& p = cfg.model_params;
  const std::string at = "model.params";
  CartPoleParams cp;
  cp.gravity = get_number(p, "gravity", cp.gravity, at);
  cp.pole_length = get_number(p, "pole_length", cp.pole_length, at);
  cp.pole_mass = get_number(p, "pole_mass", cp.pole_mass, at);
  cp.cart_mass = get_number(p, "cart_mass", cp.cart_mass, at);
  cp.force = get_number(p, "force", cp.force, at);
  cp.period = get_number(p, "period", cp.period, at);
  cp.substeps = get_int(p, "substeps", cp.substeps, at);
  cp.theta_limit = get_number(p, "theta_limit", cp.theta_limit, at);
  cp.theta_bound = get_number(p, "theta_bound", cp.theta_bound, at);
  cp.omega_bound = get_number(p, "omega_bound", cp.omega_bound, at);
  cp.cart_limit = get_number(p, "cart_limit", cp.cart_limit, at);
  cp.pole_only = get_bool(p, "pole_only", cp.pole_only, at);
  return cp;
}

}  // namespace

ControlModel build_model(const RunConfig& cfg) {
  const json& p = cfg.model_params;
  if (cfg.model_name == "oscillator") {
    OscillatorParams op;
    op.period = get_number(p, "period", op.period, "model.params");
    op.obstacle_radius =
        get_number(p, "obstacle_radius", op.obstacle_radius, "model.params");
    return make_oscillator(op);
  }
  if (cfg.model_name == "satellite") return make_satellite(satellite_params(cfg));
  if (cfg.model_name == "bouncing_ball")
    return make_bouncing_ball(bouncing_ball_params(cfg));
  if (cfg.model_name == "cart_pole") return make_cart_pole(cart_pole_params(cfg));
  fail("model.name", "unknown model '" + cfg.model_name + "'");
}

RewardModel build_reward(const RunConfig& cfg) {
  if (cfg.model_name == "satellite") return make_satellite_reward(satellite_params(cfg));
  if (cfg.model_name == "bouncing_ball")
    return make_bouncing_ball_reward(bouncing_ball_params(cfg));
  if (cfg.model_name == "cart_pole")
    return make_cart_pole_reward(cart_pole_params(cfg));
  // Pedagogical models have no optimization objective.
  RewardModel r;
  r.name = "zero";
  r.maximize = true;
  r.begin = [](const Vec&, SplitMix64&) {};
  r.step = [](const Vec&, int, Vec&, SplitMix64&) { return 0.0; };
  return r;
}

Transform build_transform(const RunConfig& cfg, const ControlModel& model) {
  const json& p = cfg.transform_params;
  const std::string at = "transform.params";

  Box domain = model.bounds;
  if (!model.shield_dims.empty()) {
    Box sub;
    for (int d : model.shield_dims) sub.push_back(model.bounds[static_cast<std::size_t>(d)]);
    domain = sub;
  }

  if (cfg.transform_name == "identity") return identity_transform(domain);
  if (cfg.transform_name == "polar") {
    const double r_max = get_number(p, "r_max", 2.0, at);
    if (r_max <= 0) fail(at + ".r_max", "must be positive");
    return polar_transform(domain, r_max);
  }
  if (cfg.transform_name == "energy") {
    const double mass = get_number(p, "mass", 1.0, at);
    const double gravity = get_number(p, "gravity", 9.81, at);
    const double e_max = get_number(p, "e_max", 100.0, at);
    return energy_transform(domain, mass, gravity, e_max);
  }
  if (cfg.transform_name == "poly_offset") {
    const json* c = find(p, "coefficients");
    if (!c || !c->is_array() || c->empty())
      fail(at + ".coefficients", "expected a non-empty array of odd-power coefficients");
    std::vector<double> coeffs;
    for (const auto& v : *c) coeffs.push_back(v.get<double>());
    return poly_offset_transform(domain, std::move(coeffs));
  }
  fail("transform.name", "unknown transform '" + cfg.transform_name + "'");
}

GridSpec build_grid(const RunConfig& cfg) {
  if (cfg.grid_axes.empty()) fail("grid", "missing");
  return GridSpec(cfg.grid_axes);
}

int default_horizon_steps(const ControlModel& model) {
  double seconds = 120.0;
  if (model.name == "cart_pole" || model.name == "cart_pole_pole") seconds = 10.0;
  return static_cast<int>(std::lround(seconds / model.period));
}

GridSpec default_observation_grid(const ControlModel& model, LearnSpace space,
                                  const Transform& tr) {
  auto axes_of = [](const Box& b, std::initializer_list<std::uint32_t> counts) {
    std::vector<GridAxis> axes;
    auto it = counts.begin();
    for (const Interval& iv : b) axes.push_back({iv.lo, iv.hi, *it++});
    return axes;
  };

  if (model.name == "cart_pole") {
    // Pole dimensions fine, cart dimensions coarse.
    std::vector<GridAxis> axes;
    axes.push_back({-0.25, 0.25, 14});
    axes.push_back({-3.0, 3.0, 12});
    axes.push_back({-3.0, 3.0, 6});
    axes.push_back({-4.0, 4.0, 6});
    return GridSpec(axes);
  }
  const Box& box = space == LearnSpace::original ? model.bounds : tr.codomain;
  if (model.name == "bouncing_ball") return GridSpec(axes_of(box, {20, 16}));
  return GridSpec(axes_of(box, {20, 20}));
}

}  // namespace gridshield
