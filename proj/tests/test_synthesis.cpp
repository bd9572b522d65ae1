#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gridshield/rng.hpp"
#include "gridshield/synthesis.hpp"

using namespace gridshield;

namespace {

constexpr double kPi = std::numbers::pi;

GridSpec polar_grid(std::uint32_t nt, std::uint32_t nr, double r_max = 2.0) {
  return GridSpec({{-kPi, kPi, nt}, {0.0, r_max, nr}});
}

GridSpec square_grid(double lo, double hi, std::uint32_t n) {
  return GridSpec({{lo, hi, n}, {lo, hi, n}});
}

/// Independent oracle: the naive greatest-fixpoint computation, recomputing
/// the full sweep from scratch until stabilization.
SafeSet naive_fixpoint(const TransitionTable& tt, const SafeSet& init) {
  SafeSet safe = init;
  bool changed = true;
  while (changed) {
    changed = false;
    SafeSet next = safe;
    for (std::size_t c = 0; c < tt.n_cells(); ++c) {
      if (!safe.test(c)) continue;
      bool ok_any = false;
      for (int a = 0; a < tt.n_actions() && !ok_any; ++a) {
        if (tt.escapes(c, a)) continue;
        bool ok = true;
        for (std::uint32_t s : tt.successors(c, a))
          if (!safe.test(s)) ok = false;
        ok_any = ok;
      }
      if (!ok_any) {
        next.set(c, false);
        changed = true;
      }
    }
    safe = next;
  }
  return safe;
}

const std::vector<double> kPoleFitCoeffs{-4.5508, -141.6953};

}  // namespace

TEST_CASE("support points: lattice membership and corner coverage") {
  const Box unit{{0.0, 1.0}, {0.0, 1.0}};
  const auto pts4 = support_points(unit, 2);
  CHECK(pts4.size() == 4);
  for (const Vec& p : pts4) {
    CHECK(box_contains(unit, p));
    CHECK((p[0] < 1e-6 || p[0] > 0.999999));
    CHECK((p[1] < 1e-6 || p[1] > 0.999999));
  }

  const auto center = support_points(unit, 1);
  REQUIRE(center.size() == 1);
  CHECK(center[0][0] == doctest::Approx(0.5));

  const GridSpec g = square_grid(-2.0, 2.0, 4);
  for (std::size_t f = 0; f < g.cell_count(); ++f) {
    const CellIndex c = g.unflatten(f);
    for (const Vec& p : support_points(g.cell_box(c), 3))
      CHECK(g.cell_of(p) == c);
  }
}

TEST_CASE("oscillator + polar transitions preserve the radius row") {
  const ControlModel osc = make_oscillator();
  const Transform polar = polar_transform(osc.bounds, 2.0);
  const GridSpec grid = polar_grid(4, 4);
  const TransitionTable tt = compute_transitions(osc, polar, grid, {}, 1);
  for (std::size_t c = 0; c < tt.n_cells(); ++c) {
    const std::uint32_t row = grid.unflatten(c)[1];
    CHECK(!tt.escapes(c, 0));
    CHECK(!tt.successors(c, 0).empty());
    for (std::uint32_t s : tt.successors(c, 0))
      CHECK(grid.unflatten(s)[1] == row);
  }
}

TEST_CASE("oscillator + identity: a cell next to the obstacle reaches it") {
  const ControlModel osc = make_oscillator();
  const Transform id = identity_transform(osc.bounds);
  const GridSpec grid = square_grid(-2.0, 2.0, 4);
  const TransitionTable tt = compute_transitions(osc, id, grid, {}, 1);

  // The cell holding (1.12, 0.5) rotates into the obstacle block around the
  // origin after one period.
  const std::size_t from = grid.flatten(grid.cell_of(Vec{1.12, 0.5}));
  const auto obstacle = outer_cells(grid, Region::disc(Vec{0.0, 0.0}, 0.4));
  bool reaches = false;
  for (std::uint32_t s : tt.successors(from, 0))
    if (std::find(obstacle.begin(), obstacle.end(), s) != obstacle.end())
      reaches = true;
  CHECK(reaches);
}

TEST_CASE("deterministic model with one support point has one successor") {
  const ControlModel osc = make_oscillator();
  const Transform id = identity_transform(osc.bounds);
  const GridSpec grid = square_grid(-2.0, 2.0, 8);
  SamplingConfig cfg;
  cfg.points_per_axis = 1;
  const TransitionTable tt = compute_transitions(osc, id, grid, cfg, 1);
  for (std::size_t c = 0; c < tt.n_cells(); ++c) {
    const std::size_t n = tt.successors(c, 0).size();
    if (tt.escapes(c, 0))
      CHECK(n == 0);
    else
      CHECK(n == 1);
  }
}

TEST_CASE("grid box must match the transform codomain") {
  const ControlModel osc = make_oscillator();
  const Transform polar = polar_transform(osc.bounds, 2.0);
  const GridSpec wrong = square_grid(-2.0, 2.0, 4);
  CHECK_THROWS_AS(compute_transitions(osc, polar, wrong, {}, 1), config_error);
}

TEST_CASE("initial marking in polar space: exactly the bottom row is unsafe") {
  const ControlModel osc = make_oscillator();
  const Transform polar = polar_transform(osc.bounds, 2.0);
  const GridSpec grid = polar_grid(4, 4);
  const SafeSet init = initial_safe(grid, polar, osc.safety, {});
  CHECK(init.count() == 12);
  for (std::size_t f = 0; f < grid.cell_count(); ++f) {
    const bool bottom_row = grid.unflatten(f)[1] == 0;
    CHECK(init.test(f) == !bottom_row);
  }
}

TEST_CASE("initial marking with phi = everything keeps cells with preimages") {
  const ControlModel bb = make_bouncing_ball();
  const Transform en = energy_transform(bb.bounds, 1.0, 9.81, 100.0);
  const GridSpec grid({{0.0, 100.0, 10}, {-13.0, 13.0, 10}});
  const SafeSet init = initial_safe(grid, en, Region::all(), {});
  for (std::size_t f = 0; f < grid.cell_count(); ++f) {
    bool has_preimage = false;
    for (const Vec& t : support_points(grid.cell_box(grid.unflatten(f)), 7))
      if (!en.inverse(t).empty()) has_preimage = true;
    // the sampled witness under-approximates the exact preimage test
    if (has_preimage) CHECK(init.test(f));
  }
  CHECK(init.count() > 0);
  CHECK(init.count() < grid.cell_count());
}

TEST_CASE("poly-offset initial marking keeps exactly the theta-cone columns") {
  // wide box around the cone: only the two middle columns align with it
  const Box wide{{-2.095, 2.095}, {-3.0, 3.0}};
  const Transform po = poly_offset_transform(wide, kPoleFitCoeffs);
  const Region cone = Region::box(Box{{-0.2095, 0.2095}, {-1e18, 1e18}});
  const GridSpec grid({{-2.095, 2.095, 20}, {-3.0, 3.0, 20}});
  const SafeSet init = initial_safe(grid, po, cone, {});
  for (std::size_t f = 0; f < grid.cell_count(); ++f) {
    const Box cell = grid.cell_box(grid.unflatten(f));
    const double tol = 1e-9 * cell[0].diameter();
    const bool theta_inside =
        cell[0].lo >= -0.2095 - tol && cell[0].hi <= 0.2095 + tol;
    CHECK(init.test(f) == theta_inside);
  }
  CHECK(init.count() == 2 * 20);
}

TEST_CASE("fixpoint: oscillator on the identity grid collapses to nothing") {
  const ControlModel osc = make_oscillator();
  const Transform id = identity_transform(osc.bounds);
  const GridSpec grid = square_grid(-2.0, 2.0, 4);
  const TransitionTable tt = compute_transitions(osc, id, grid, {}, 1);
  const SafeSet init = initial_safe(grid, id, osc.safety, {});
  CHECK(init.count() == 12);
  const SafeSet safe = fixpoint(tt, init);
  CHECK(safe.count() == 0);
  CHECK(safe == naive_fixpoint(tt, init));
}

TEST_CASE("fixpoint: oscillator in polar space keeps the initial marking") {
  const ControlModel osc = make_oscillator();
  const Transform polar = polar_transform(osc.bounds, 2.0);
  const GridSpec grid = polar_grid(4, 4);
  const TransitionTable tt = compute_transitions(osc, polar, grid, {}, 1);
  const SafeSet init = initial_safe(grid, polar, osc.safety, {});
  const SafeSet safe = fixpoint(tt, init);
  CHECK(safe == init);
  CHECK(safe.count() == 12);
  CHECK(safe == naive_fixpoint(tt, init));
}

TEST_CASE("fixpoint of the empty initial set is empty") {
  const ControlModel osc = make_oscillator();
  const Transform id = identity_transform(osc.bounds);
  const GridSpec grid = square_grid(-2.0, 2.0, 4);
  const TransitionTable tt = compute_transitions(osc, id, grid, {}, 1);
  CHECK(fixpoint(tt, SafeSet(grid.cell_count(), false)).count() == 0);
}

TEST_CASE("fixpoint agrees with the naive oracle on the bouncing ball") {
  const ControlModel bb = make_bouncing_ball();
  const Transform en = energy_transform(bb.bounds, 1.0, 9.81, 100.0);
  const GridSpec grid({{0.0, 100.0, 13}, {-13.0, 13.0, 13}});
  SamplingConfig cfg;
  cfg.points_per_axis = 3;
  const TransitionTable tt = compute_transitions(bb, en, grid, cfg, 1);
  const SafeSet init = initial_safe(grid, en, bb.safety, cfg);
  std::size_t sweeps = 0;
  const SafeSet safe = fixpoint(tt, init, &sweeps);
  CHECK(safe == naive_fixpoint(tt, init));
  CHECK(sweeps <= grid.cell_count());
}

TEST_CASE("fixpoint is monotone in the initial set") {
  const ControlModel bb = make_bouncing_ball();
  const Transform en = energy_transform(bb.bounds, 1.0, 9.81, 100.0);
  const GridSpec grid({{0.0, 100.0, 10}, {-13.0, 13.0, 10}});
  SamplingConfig cfg;
  cfg.points_per_axis = 3;
  const TransitionTable tt = compute_transitions(bb, en, grid, cfg, 1);
  const SafeSet big = initial_safe(grid, en, bb.safety, cfg);
  SafeSet small = big;
  SplitMix64 rng(5);
  for (std::size_t f = 0; f < grid.cell_count(); ++f)
    if (small.test(f) && rng.uniform01() < 0.3) small.set(f, false);
  const SafeSet fp_small = fixpoint(tt, small);
  const SafeSet fp_big = fixpoint(tt, big);
  for (std::size_t f = 0; f < grid.cell_count(); ++f)
    if (fp_small.test(f)) CHECK(fp_big.test(f));
}

TEST_CASE("bounded fixpoint: k = 0 is the initial set, large k is the fixpoint") {
  const ControlModel osc = make_oscillator();
  const Transform id = identity_transform(osc.bounds);
  const GridSpec grid = square_grid(-2.0, 2.0, 4);
  const TransitionTable tt = compute_transitions(osc, id, grid, {}, 1);
  const SafeSet init = initial_safe(grid, id, osc.safety, {});

  CHECK(bounded_fixpoint(tt, init, 0) == init);
  CHECK(bounded_fixpoint(tt, init, grid.cell_count() + 1) == fixpoint(tt, init));

  // antitone in k
  std::size_t prev = init.count();
  for (std::size_t k = 1; k <= 6; ++k) {
    const std::size_t now = bounded_fixpoint(tt, init, k).count();
    CHECK(now <= prev);
    prev = now;
  }
}

TEST_CASE("cart-pole 20x20 identity grid: three bounded sweeps leave a marking") {
  const CartPoleParams pp{.pole_only = true};
  const ControlModel cp = make_cart_pole(pp);
  const Transform id = identity_transform(cp.bounds);
  const GridSpec grid({{-pp.theta_bound, pp.theta_bound, 20},
                       {-pp.omega_bound, pp.omega_bound, 20}});
  const TransitionTable tt = compute_transitions(cp, id, grid, {}, 1);
  const SafeSet init = initial_safe(grid, id, cp.safety, {});
  CHECK(init.count() == grid.cell_count());  // the cone is the state box
  const SafeSet marked = bounded_fixpoint(tt, init, 3);
  CHECK(marked.count() > 0);
  CHECK(marked.count() < init.count());
}

TEST_CASE("most-permissive masks: zero exactly outside the safe set") {
  const ControlModel osc = make_oscillator();
  const Transform polar = polar_transform(osc.bounds, 2.0);
  const GridSpec grid = polar_grid(4, 4);
  const TransitionTable tt = compute_transitions(osc, polar, grid, {}, 1);
  const SafeSet safe = fixpoint(tt, initial_safe(grid, polar, osc.safety, {}));
  const auto masks = permissive_masks(tt, safe);
  for (std::size_t f = 0; f < grid.cell_count(); ++f) {
    CHECK((masks[f] != 0) == safe.test(f));
    if (safe.test(f)) CHECK(masks[f] == 0x1);  // the single action
  }
}

TEST_CASE("fixpoint soundness: allowed actions only reach safe cells") {
  const ControlModel bb = make_bouncing_ball();
  const Transform en = energy_transform(bb.bounds, 1.0, 9.81, 100.0);
  const GridSpec grid({{0.0, 100.0, 26}, {-13.0, 13.0, 25}});
  const TransitionTable tt = compute_transitions(bb, en, grid, {}, 1);
  const SafeSet safe = fixpoint(tt, initial_safe(grid, en, bb.safety, {}));
  REQUIRE(safe.count() > 0);
  const auto masks = permissive_masks(tt, safe);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    if (!safe.test(c)) continue;
    CHECK(masks[c] != 0);
    for (int a = 0; a < tt.n_actions(); ++a) {
      if (!mask_allows(masks[c], a)) continue;
      CHECK(!tt.escapes(c, a));
      for (std::uint32_t s : tt.successors(c, a)) CHECK(safe.test(s));
    }
  }
}

TEST_CASE("denser support sampling can only shrink the fixpoint") {
  const ControlModel bb = make_bouncing_ball();
  const Transform en = energy_transform(bb.bounds, 1.0, 9.81, 100.0);
  const GridSpec grid({{0.0, 100.0, 13}, {-13.0, 13.0, 13}});
  SamplingConfig coarse, dense;
  coarse.points_per_axis = 2;
  coarse.random_disturbances = 0;
  dense.points_per_axis = 4;
  dense.random_disturbances = 0;
  const SafeSet init = initial_safe(grid, en, bb.safety, dense);
  const SafeSet fp_coarse =
      fixpoint(compute_transitions(bb, en, grid, coarse, 1), init);
  const SafeSet fp_dense =
      fixpoint(compute_transitions(bb, en, grid, dense, 1), init);
  // per-axis 2 points are a subset of per-axis 4? not exactly the same
  // lattice, so compare through the naive containment property instead:
  // every cell safe under the denser table must be safe under the coarser.
  for (std::size_t f = 0; f < grid.cell_count(); ++f)
    if (fp_dense.test(f)) CHECK(fp_coarse.test(f));
}

TEST_CASE("boundary extraction on rectangular and symmetric markings") {
  const GridSpec grid({{-1.0, 1.0, 10}, {-1.0, 1.0, 8}});
  SafeSet rect(grid.cell_count(), false);
  for (std::uint32_t i = 2; i < 8; ++i)
    for (std::uint32_t j = 3; j < 6; ++j) rect.set(grid.flatten(CellIndex{i, j}));
  const auto cols = extract_boundaries(rect, grid);
  CHECK(cols.size() == 6);
  for (const BoundaryColumn& c : cols) CHECK(c.mid == doctest::Approx(cols[0].mid));

  // marking symmetric under point reflection: mid is an odd function of
  // the column center
  SafeSet diag(grid.cell_count(), false);
  for (std::uint32_t i = 0; i < 5; ++i) {
    const std::uint32_t j = 2 + i / 2;
    diag.set(grid.flatten(CellIndex{i, j}));
    diag.set(grid.flatten(CellIndex{9 - i, 7 - j}));
  }
  const auto dcols = extract_boundaries(diag, grid);
  REQUIRE(dcols.size() == 10);
  for (std::size_t k = 0; k < 5; ++k)
    CHECK(dcols[k].mid == doctest::Approx(-dcols[9 - k].mid).epsilon(1e-12));

  CHECK_THROWS_AS(extract_boundaries(SafeSet(grid.cell_count(), false), grid),
                  degenerate_marking);
}

TEST_CASE("polynomial fit recovers exact coefficients") {
  const int powers[] = {1, 3};
  std::vector<std::pair<double, double>> pts;
  for (double x = -1.0; x <= 1.001; x += 0.1)
    pts.emplace_back(x, -4.5508 * x - 141.6953 * x * x * x);
  const auto c = fit_odd_polynomial(pts, powers);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == doctest::Approx(-4.5508).epsilon(1e-6));
  CHECK(c[1] == doctest::Approx(-141.6953).epsilon(1e-6));

  std::vector<std::pair<double, double>> zeros;
  for (double x = -1.0; x <= 1.001; x += 0.25) zeros.emplace_back(x, 0.0);
  const auto z = fit_odd_polynomial(zeros, powers);
  CHECK(z[0] == doctest::Approx(0.0));
  CHECK(z[1] == doctest::Approx(0.0));

  std::vector<std::pair<double, double>> lin;
  for (double x = -1.0; x <= 1.001; x += 0.25) lin.emplace_back(x, 2.0 * x);
  const auto l = fit_odd_polynomial(lin, powers);
  CHECK(l[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(l[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("degenerate fits are rejected") {
  const int powers[] = {1, 3};
  std::vector<std::pair<double, double>> one{{0.5, 1.0}};
  CHECK_THROWS_AS(fit_odd_polynomial(one, powers), singular_fit);

  // many points, but a single distinct abscissa
  std::vector<std::pair<double, double>> dup(5, {0.5, 1.0});
  CHECK_THROWS_AS(fit_odd_polynomial(dup, powers), singular_fit);
}
