#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gridshield/common.hpp"
#include "gridshield/geometry.hpp"
#include "gridshield/rng.hpp"

namespace gridshield {

/// Discrete-time control system: a bounded state box, a finite action set
/// and a successor sampler. The sampler is deterministic in
/// (state, action, disturbance sample); stochastic models expose their
/// randomness through the disturbance argument (one uniform [0,1] value per
/// disturbance dimension). Successors may leave the state box.
struct ControlModel {
  std::string name;
  int dim = 0;
  Box bounds;
  std::vector<std::string> actions;
  int disturbance_arity = 0;
  double period = 0.0;
  Region safety;
  /// State dimensions a shield observes (prefix of the state vector);
  /// empty means the whole state.
  std::vector<int> shield_dims;
  std::function<Vec(const Vec&, int, std::span<const double>)> step;

  int action_index(const std::string& a) const;
};

/// Per-step reward with episode-local bookkeeping. `begin` is called once at
/// episode start; `step` returns the reward of a transition and may adjust
/// the post-state (e.g. the cart reset). Instances are confined to a single
/// episode executor at a time; parallel evaluation obtains an independent
/// instance per worker through `clone` (plain copies share bookkeeping).
struct RewardModel {
  std::string name;
  bool maximize = true;
  std::function<void(const Vec&, SplitMix64&)> begin;
  std::function<double(const Vec&, int, Vec&, SplitMix64&)> step;
  std::function<RewardModel()> clone;

  RewardModel fresh() const { return clone ? clone() : *this; }
};

// ---------------------------------------------------------------------------
// Harmonic oscillator (single dummy action, rotation dynamics)

struct OscillatorParams {
  double period = 1.2;
  double obstacle_radius = 0.4;
};

/// Rotation by `period` radians: the closed-form solution of the
/// oscillator ODE after one control period.
Vec oscillator_step(const Vec& s, double period);

ControlModel make_oscillator(const OscillatorParams& p = {});

// ---------------------------------------------------------------------------
// Satellite (oscillator with radial thrust actions: ahead, out, in)

struct SatelliteDisc {
  double x = 0.0, y = 0.0, radius = 0.0;
};

struct SatelliteParams {
  double period = 0.05;
  double out_factor = 1.01;
  double in_factor = 0.99;
  double max_radius = 2.0;
  std::vector<SatelliteDisc> obstacles;  // empty selects the default layout
  double destination_radius = 0.3;
};

std::vector<SatelliteDisc> default_satellite_obstacles();
Vec satellite_step(const Vec& s, int action, const SatelliteParams& p = {});
ControlModel make_satellite(const SatelliteParams& p = {});
RewardModel make_satellite_reward(const SatelliteParams& p = {});

// ---------------------------------------------------------------------------
// Bouncing ball (state (v, p); hybrid free fall with stochastic dampening)

struct BouncingBallParams {
  double gravity = 9.81;
  double mass = 1.0;
  double period = 0.1;
  double hit_min_height = 4.0;   // hit available only when p >= this
  double hit_impulse = 4.0;      // v <- min(v, 0) - hit_impulse
  double damp_min = 0.91;        // dampening c = damp_min + damp_span * u
  double damp_span = 0.06;
  double unsafe_speed = 1.0;     // unsafe when |v| <= this ...
  double unsafe_height = 0.01;   // ... and p <= this
  double v_min = -13.0, v_max = 13.0;
  double p_max = 8.0;
};

/// One control period of the ball: optional hit impulse, then closed-form
/// free fall with exact zero-crossing detection; every ground contact
/// bounces with v <- -c v, c drawn from the disturbance. Handles multiple
/// bounces per period and comes to rest instead of chattering.
Vec bouncing_ball_step(const Vec& s, int action, double u,
                       const BouncingBallParams& p = {});

ControlModel make_bouncing_ball(const BouncingBallParams& p = {});
RewardModel make_bouncing_ball_reward(const BouncingBallParams& p = {});

// ---------------------------------------------------------------------------
// Cart-pole (theta, omega, x, v; actions left/right)

struct CartPoleParams {
  double gravity = 9.8;
  double pole_length = 0.5;
  double pole_mass = 0.1;
  double cart_mass = 1.0;
  double force = 10.0;
  double period = 0.02;
  int substeps = 1;             // RK4 steps per control period
  double theta_limit = 0.2095;  // safe cone |theta| <= theta_limit
  double theta_bound = 0.2095;  // pole state box (the cone itself)
  double omega_bound = 3.0;
  double cart_limit = 2.4;      // reward: reset beyond |x - x0| > cart_limit
  bool pole_only = false;       // 2-D (theta, omega) subsystem
};

/// Full 4-D dynamics integrated with RK4. The pole subsystem does not
/// depend on the cart, so a 2-D state is accepted as well.
Vec cart_pole_step(const Vec& s, int action, const CartPoleParams& p = {});

ControlModel make_cart_pole(const CartPoleParams& p = {});
RewardModel make_cart_pole_reward(const CartPoleParams& p = {});

// ---------------------------------------------------------------------------

/// Default episode initial-state sampler for a model (used by learning and
/// rollouts; all distributions can be overridden in the run configuration).
std::function<Vec(SplitMix64&)> default_initial_sampler(const ControlModel& model);

}  // namespace gridshield
