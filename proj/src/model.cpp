#include "gridshield/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace gridshield {

int ControlModel::action_index(const std::string& a) const {
  for (std::size_t i = 0; i < actions.size(); ++i)
    if (actions[i] == a) return static_cast<int>(i);
  throw config_error("model '" + name + "' has no action '" + a + "'");
}

// ---------------------------------------------------------------------------
// Oscillator

Vec oscillator_step(const Vec& s, double period) {
  const double c = std::cos(period), n = std::sin(period);
  return Vec{c * s[0] + n * s[1], -n * s[0] + c * s[1]};
}

ControlModel make_oscillator(const OscillatorParams& p) {
  ControlModel m;
  m.name = "oscillator";
  m.dim = 2;
  m.bounds = Box{{-2.0, 2.0}, {-2.0, 2.0}};
  m.actions = {"a"};
  m.disturbance_arity = 0;
  m.period = p.period;
  m.safety = Region::complement(Region::disc(Vec{0.0, 0.0}, p.obstacle_radius));
  const double period = p.period;
  m.step = [period](const Vec& s, int, std::span<const double>) {
    return oscillator_step(s, period);
  };
  return m;
}

// ---------------------------------------------------------------------------
// Satellite

std::vector<SatelliteDisc> default_satellite_obstacles() {
  std::vector<SatelliteDisc> obs;
  obs.push_back({0.0, 0.0, 0.4});
  const double d = 1.2;
  for (double deg : {45.0, 135.0, 225.0, 315.0}) {
    const double a = deg * std::numbers::pi / 180.0;
    obs.push_back({d * std::cos(a), d * std::sin(a), 0.3});
  }
  return obs;
}

Vec satellite_step(const Vec& s, int action, const SatelliteParams& p) {
  // Radius scaling followed by the rotation e^{At}; the origin is a fixed
  // point (it lies inside the central obstacle and is never controllable).
  if (s[0] == 0.0 && s[1] == 0.0) return Vec{0.0, 0.0};
  double c = 1.0;
  if (action == 1) c = p.out_factor;
  if (action == 2) c = p.in_factor;
  const double ct = std::cos(p.period), st = std::sin(p.period);
  const double x = c * s[0], y = c * s[1];
  return Vec{ct * x + st * y, -st * x + ct * y};
}

static std::vector<SatelliteDisc> satellite_obstacles(const SatelliteParams& p) {
  return p.obstacles.empty() ? default_satellite_obstacles() : p.obstacles;
}

static Region satellite_safety(const SatelliteParams& p) {
  std::vector<Region> obs;
  for (const SatelliteDisc& o : satellite_obstacles(p))
    obs.push_back(Region::disc(Vec{o.x, o.y}, o.radius));
  return Region::intersection_of(
      {Region::disc(Vec{0.0, 0.0}, p.max_radius),
       Region::complement(Region::union_of(std::move(obs)))});
}

ControlModel make_satellite(const SatelliteParams& p) {
  ControlModel m;
  m.name = "satellite";
  m.dim = 2;
  m.bounds = Box{{-2.0, 2.0}, {-2.0, 2.0}};
  m.actions = {"ahead", "out", "in"};
  m.disturbance_arity = 0;
  m.period = p.period;
  m.safety = satellite_safety(p);
  SatelliteParams params = p;
  m.step = [params](const Vec& s, int a, std::span<const double>) {
    return satellite_step(s, a, params);
  };
  return m;
}

RewardModel make_satellite_reward(const SatelliteParams& p) {
  // +1 whenever the agent overlaps the destination disc, which then
  // respawns uniformly inside the flight disc, clear of obstacles.
  struct DestState {
    Vec center{0.0, 0.0};
  };
  auto dest = std::make_shared<DestState>();
  SatelliteParams params = p;
  auto obstacles = satellite_obstacles(p);

  auto spawn = [params, obstacles](SplitMix64& rng) {
    for (int tries = 0; tries < 10000; ++tries) {
      const double x = rng.uniform(-params.max_radius, params.max_radius);
      const double y = rng.uniform(-params.max_radius, params.max_radius);
      if (x * x + y * y > params.max_radius * params.max_radius) continue;
      bool clear = true;
      for (const SatelliteDisc& o : obstacles) {
        const double dx = x - o.x, dy = y - o.y;
        if (dx * dx + dy * dy <= o.radius * o.radius) clear = false;
      }
      if (clear) return Vec{x, y};
    }
    return Vec{0.0, 1.5};
  };

  RewardModel r;
  r.name = "satellite_destinations";
  r.maximize = true;
  r.begin = [dest, spawn](const Vec&, SplitMix64& rng) { dest->center = spawn(rng); };
  const double dr = p.destination_radius;
  r.step = [dest, spawn, dr](const Vec&, int, Vec& next, SplitMix64& rng) {
    const double dx = next[0] - dest->center[0], dy = next[1] - dest->center[1];
    if (dx * dx + dy * dy <= dr * dr) {
      dest->center = spawn(rng);
      return 1.0;
    }
    return 0.0;
  };
  SatelliteParams reward_params = p;
  r.clone = [reward_params] { return make_satellite_reward(reward_params); };
  return r;
}

// ---------------------------------------------------------------------------
// Bouncing ball

Vec bouncing_ball_step(const Vec& s, int action, double u,
                       const BouncingBallParams& p) {
  double v = s[0];
  double pos = std::max(s[1], 0.0);
  const double g = p.gravity;

  if (action == 1 && pos >= p.hit_min_height) v = std::min(v, 0.0) - p.hit_impulse;

  const double damp = p.damp_min + p.damp_span * u;
  double remaining = p.period;
  while (remaining > 0.0) {
    if (pos <= 0.0) {
      pos = 0.0;
      if (v < 0.0) v = -damp * v;                    // impact at the start of the slice
      if (v <= 1e-12) return Vec{0.0, 0.0};          // at rest; Zeno cutoff
    }
    // Free fall: p(t) = pos + v t - g t^2 / 2. Earliest ground contact:
    const double disc = v * v + 2.0 * g * pos;
    const double t_hit = (v + std::sqrt(disc)) / g;
    if (t_hit >= remaining || t_hit <= 0.0) {
      const double t = remaining;
      const double new_pos = pos + v * t - 0.5 * g * t * t;
      return Vec{v - g * t, std::max(new_pos, 0.0)};
    }
    v = -(v - g * t_hit);
    v *= damp;
    pos = 0.0;
    remaining -= t_hit;
    if (v <= 1e-12) return Vec{0.0, 0.0};
  }
  return Vec{v, pos};
}

ControlModel make_bouncing_ball(const BouncingBallParams& p) {
  ControlModel m;
  m.name = "bouncing_ball";
  m.dim = 2;
  m.bounds = Box{{p.v_min, p.v_max}, {0.0, p.p_max}};
  m.actions = {"nohit", "hit"};
  m.disturbance_arity = 1;
  m.period = p.period;
  m.safety = Region::complement(Region::box(
      Box{{-p.unsafe_speed, p.unsafe_speed}, {-1.0, p.unsafe_height}}));
  BouncingBallParams params = p;
  m.step = [params](const Vec& s, int a, std::span<const double> u) {
    return bouncing_ball_step(s, a, u.empty() ? 0.5 : u[0], params);
  };
  return m;
}

RewardModel make_bouncing_ball_reward(const BouncingBallParams&) {
  RewardModel r;
  r.name = "bouncing_ball_hits";
  r.maximize = false;  // cost 1 per hit taken, minimized
  r.begin = [](const Vec&, SplitMix64&) {};
  r.step = [](const Vec&, int a, Vec&, SplitMix64&) { return a == 1 ? 1.0 : 0.0; };
  return r;
}

// ---------------------------------------------------------------------------
// Cart-pole

namespace {

struct CartPoleRhs {
  double theta_dot, omega_dot, x_dot, v_dot;
};

CartPoleRhs cart_pole_rhs(double theta, double omega, double v, double force,
                          const CartPoleParams& p) {
  const double total_mass = p.cart_mass + p.pole_mass;
  const double sin_t = std::sin(theta), cos_t = std::cos(theta);
  const double omega_dot =
      (p.gravity * sin_t +
       cos_t * ((-force - p.pole_mass * p.pole_length * omega * omega * sin_t) /
                total_mass)) /
      (p.pole_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total_mass));
  const double v_dot =
      (force + p.pole_mass * p.pole_length *
                   (omega * omega * sin_t - omega_dot * cos_t)) /
      total_mass;
  return {omega, omega_dot, v, v_dot};
}

}  // namespace

Vec cart_pole_step(const Vec& s, int action, const CartPoleParams& p) {
  const bool full = s.size() >= 4;
  const double force = action == 1 ? p.force : -p.force;

  double y[4] = {s[0], s[1], full ? s[2] : 0.0, full ? s[3] : 0.0};
  const int n = std::max(p.substeps, 1);
  const double h = p.period / n;

  auto deriv = [&](const double* in, double* out) {
    CartPoleRhs d = cart_pole_rhs(in[0], in[1], in[3], force, p);
    out[0] = d.theta_dot;
    out[1] = d.omega_dot;
    out[2] = d.x_dot;
    out[3] = d.v_dot;
  };

  double k1[4], k2[4], k3[4], k4[4], tmp[4];
  for (int step = 0; step < n; ++step) {
    deriv(y, k1);
    for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    deriv(tmp, k2);
    for (int i = 0; i < 4; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    deriv(tmp, k3);
    for (int i = 0; i < 4; ++i) tmp[i] = y[i] + h * k3[i];
    deriv(tmp, k4);
    for (int i = 0; i < 4; ++i)
      y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }

  if (full) return Vec{y[0], y[1], y[2], y[3]};
  return Vec{y[0], y[1]};
}

ControlModel make_cart_pole(const CartPoleParams& p) {
  const double big = 1e18;
  ControlModel m;
  m.name = p.pole_only ? "cart_pole_pole" : "cart_pole";
  m.period = p.period;
  m.actions = {"left", "right"};
  m.disturbance_arity = 0;
  CartPoleParams params = p;
  m.step = [params](const Vec& s, int a, std::span<const double>) {
    return cart_pole_step(s, a, params);
  };
  if (p.pole_only) {
    m.dim = 2;
    m.bounds = Box{{-p.theta_bound, p.theta_bound}, {-p.omega_bound, p.omega_bound}};
    m.safety = Region::box(Box{{-p.theta_limit, p.theta_limit}, {-big, big}});
  } else {
    m.dim = 4;
    m.bounds = Box{{-p.theta_bound, p.theta_bound},
                   {-p.omega_bound, p.omega_bound},
                   {-3.0, 3.0},
                   {-4.0, 4.0}};
    m.shield_dims = {0, 1};
    m.safety = Region::box(
        Box{{-p.theta_limit, p.theta_limit}, {-big, big}, {-big, big}, {-big, big}});
  }
  return m;
}

RewardModel make_cart_pole_reward(const CartPoleParams& p) {
  // Cost 1 whenever the cart strays more than cart_limit from its starting
  // position; the cart (x, v) then snaps back to the initial values.
  struct Home {
    double x0 = 0.0, v0 = 0.0;
  };
  auto home = std::make_shared<Home>();
  const double limit = p.cart_limit;

  RewardModel r;
  r.name = "cart_pole_resets";
  r.maximize = false;
  r.begin = [home](const Vec& s, SplitMix64&) {
    home->x0 = s.size() >= 4 ? s[2] : 0.0;
    home->v0 = s.size() >= 4 ? s[3] : 0.0;
  };
  r.step = [home, limit](const Vec&, int, Vec& next, SplitMix64&) {
    if (next.size() >= 4 && std::abs(next[2] - home->x0) > limit) {
      next[2] = home->x0;
      next[3] = home->v0;
      return 1.0;
    }
    return 0.0;
  };
  CartPoleParams reward_params = p;
  r.clone = [reward_params] { return make_cart_pole_reward(reward_params); };
  return r;
}

// ---------------------------------------------------------------------------

std::function<Vec(SplitMix64&)> default_initial_sampler(const ControlModel& model) {
  if (model.name == "satellite") {
    // Start in the annulus between the obstacle band and the outer rim;
    // radial thrust is 1% per period, so states deep inside the obstacle
    // band have no controllable future at grid scale.
    Region safety = model.safety;
    return [safety](SplitMix64& rng) {
      for (int tries = 0; tries < 10000; ++tries) {
        const double r = rng.uniform(1.6, 1.9);
        const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
        Vec s{r * std::cos(a), r * std::sin(a)};
        if (safety.contains(s)) return s;
      }
      return Vec{0.0, 1.75};
    };
  }
  if (model.name == "bouncing_ball") {
    return [](SplitMix64&) { return Vec{0.0, 7.0}; };
  }
  if (model.name == "cart_pole" || model.name == "cart_pole_pole") {
    const int dim = model.dim;
    return [dim](SplitMix64& rng) {
      Vec s(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i) s[i] = rng.uniform(-0.05, 0.05);
      return s;
    };
  }
  // Oscillator and custom models: uniform over the state box.
  Box bounds = model.bounds;
  return [bounds](SplitMix64& rng) {
    Vec s(bounds.size());
    for (std::size_t i = 0; i < bounds.size(); ++i)
      s[i] = rng.uniform(bounds[i].lo, bounds[i].hi);
    return s;
  };
}

}  // namespace gridshield
