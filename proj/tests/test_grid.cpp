#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gridshield/grid.hpp"
#include "gridshield/rng.hpp"

using namespace gridshield;

namespace {

GridSpec square_grid(double lo, double hi, std::uint32_t n) {
  return GridSpec({{lo, hi, n}, {lo, hi, n}});
}

std::size_t flat(const GridSpec& g, std::uint32_t i, std::uint32_t j) {
  return g.flatten(CellIndex{i, j});
}

// Independent distance oracle: squared distance from a point to the closure
// of a box.
double dist2_to_box(const Vec& p, const Box& b) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double c = std::clamp(p[i], b[i].lo, b[i].hi);
    d2 += (p[i] - c) * (p[i] - c);
  }
  return d2;
}

}  // namespace

TEST_CASE("cell_of maps points to their half-open cell") {
  const GridSpec g = square_grid(0.0, 4.0, 4);
  CHECK(g.cell_of(Vec{2.5, 0.1}) == CellIndex{2, 0});
  CHECK(g.cell_of(Vec{0.0, 0.0}) == CellIndex{0, 0});

  const GridSpec g2 = square_grid(-2.0, 2.0, 4);
  CHECK(g2.cell_of(Vec{1.99, -2.0}) == CellIndex{3, 0});

  CHECK_THROWS_AS(g.cell_of(Vec{4.0, 0.0}), out_of_bounds);
  CHECK_THROWS_AS(g.cell_of(Vec{2.0, -0.001}), out_of_bounds);
  CHECK_THROWS_AS(g.cell_of(Vec{-1e-12, 1.0}), out_of_bounds);
}

TEST_CASE("cell_box and the round trip through cell centers") {
  const GridSpec g = square_grid(0.0, 4.0, 4);
  const Box b = g.cell_box(CellIndex{2, 0});
  CHECK(b[0] == Interval{2.0, 3.0});
  CHECK(b[1] == Interval{0.0, 1.0});

  const GridSpec g2 = square_grid(-2.0, 2.0, 4);
  const Box b2 = g2.cell_box(CellIndex{0, 0});
  CHECK(b2[0] == Interval{-2.0, -1.0});
  CHECK(b2[1] == Interval{-2.0, -1.0});

  CHECK_THROWS_AS(g.cell_box(CellIndex{4, 0}), invalid_index);

  const GridSpec g3({{-1.0, 2.0, 3}, {0.0, 1.0, 5}, {-4.0, -1.0, 2}});
  for (std::size_t f = 0; f < g3.cell_count(); ++f) {
    const CellIndex c = g3.unflatten(f);
    CHECK(g3.cell_of(g3.cell_center(c)) == c);
    CHECK(g3.flatten(c) == f);
  }
}

TEST_CASE("outer_cells of the centered disc marks the 2x2 block") {
  const GridSpec g = square_grid(-2.0, 2.0, 4);
  const Region disc = Region::disc(Vec{0.0, 0.0}, 0.4);
  const std::vector<std::size_t> expected{flat(g, 1, 1), flat(g, 1, 2),
                                          flat(g, 2, 1), flat(g, 2, 2)};
  auto got = outer_cells(g, disc);
  std::sort(got.begin(), got.end());
  auto want = expected;
  std::sort(want.begin(), want.end());
  CHECK(got == want);
}

TEST_CASE("outer_cells: empty union and axis-aligned box") {
  const GridSpec g = square_grid(0.0, 4.0, 4);
  CHECK(outer_cells(g, Region::union_of({})).empty());

  const Region row = Region::box(Box{{0.0, 4.0}, {0.0, 1.0}});
  auto got = outer_cells(g, row);
  std::vector<std::size_t> want;
  for (std::uint32_t i = 0; i < 4; ++i) want.push_back(flat(g, i, 0));
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  CHECK(got == want);
}

TEST_CASE("inner_cells of the disc complement excludes the 2x2 block") {
  const GridSpec g = square_grid(-2.0, 2.0, 4);
  const Region phi = Region::complement(Region::disc(Vec{0.0, 0.0}, 0.4));
  auto got = inner_cells(g, phi);

  // Oracle: a cell avoids the disc exactly when the nearest point of its
  // closure is farther than the radius.
  std::vector<std::size_t> want;
  for (std::size_t f = 0; f < g.cell_count(); ++f)
    if (dist2_to_box(Vec{0.0, 0.0}, g.cell_box(g.unflatten(f))) > 0.4 * 0.4)
      want.push_back(f);
  CHECK(got == want);
  CHECK(got.size() == 12);
  for (std::size_t f : {flat(g, 1, 1), flat(g, 1, 2), flat(g, 2, 1), flat(g, 2, 2)})
    CHECK(std::find(got.begin(), got.end(), f) == got.end());
}

TEST_CASE("inner_cells: full box and a tiny disc") {
  const GridSpec g = square_grid(0.0, 4.0, 4);
  CHECK(inner_cells(g, Region::all()).size() == g.cell_count());
  CHECK(inner_cells(g, Region::disc(Vec{0.5, 0.5}, 0.1)).empty());
}

TEST_CASE("partition property: every in-bounds point is in exactly one cell") {
  const GridSpec g({{-1.5, 2.5, 7}, {0.0, 1.0, 3}});
  SplitMix64 rng(7);
  for (int k = 0; k < 2000; ++k) {
    Vec p{rng.uniform(-1.5, 2.5), rng.uniform(0.0, 1.0)};
    if (!g.contains(p)) continue;
    const CellIndex c = g.cell_of(p);
    const Box b = g.cell_box(c);
    CHECK(box_contains(b, p));
    // neighbours do not contain it
    for (int di = -1; di <= 1; ++di)
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        const std::int64_t i = static_cast<std::int64_t>(c[0]) + di;
        const std::int64_t j = static_cast<std::int64_t>(c[1]) + dj;
        if (i < 0 || j < 0 || i >= 7 || j >= 3) continue;
        CHECK(!box_contains(g.cell_box(CellIndex{static_cast<std::uint32_t>(i),
                                                 static_cast<std::uint32_t>(j)}),
                            p));
      }
  }
}

namespace {

Region random_region(SplitMix64& rng, int depth = 0) {
  const int kind = static_cast<int>(rng.uniform_int(depth >= 2 ? 3 : 5));
  switch (kind) {
    case 0:
      return Region::disc(Vec{rng.uniform(-2, 2), rng.uniform(-2, 2)},
                          rng.uniform(0.1, 1.5));
    case 1: {
      const double x0 = rng.uniform(-2, 1), y0 = rng.uniform(-2, 1);
      return Region::box(Box{{x0, x0 + rng.uniform(0.2, 2.0)},
                             {y0, y0 + rng.uniform(0.2, 2.0)}});
    }
    case 2:
      return Region::half_plane(Vec{rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                rng.uniform(-1, 1));
    case 3:
      return Region::complement(random_region(rng, depth + 1));
    default:
      return Region::union_of(
          {random_region(rng, depth + 1), random_region(rng, depth + 1)});
  }
}

}  // namespace

TEST_CASE("inner_cells is a subset of outer_cells for random regions") {
  SplitMix64 rng(11);
  const GridSpec g = square_grid(-2.0, 2.0, 5);
  for (int k = 0; k < 50; ++k) {
    const Region r = random_region(rng);
    const auto in = inner_cells(g, r);
    const auto out = outer_cells(g, r);
    CHECK(std::includes(out.begin(), out.end(), in.begin(), in.end()));
  }
}

TEST_CASE("outer_cells is monotone in the region") {
  const GridSpec g = square_grid(-2.0, 2.0, 6);
  SplitMix64 rng(3);
  for (int k = 0; k < 30; ++k) {
    const Vec c{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double r0 = rng.uniform(0.1, 0.8);
    const auto small = outer_cells(g, Region::disc(c, r0));
    const auto large = outer_cells(g, Region::disc(c, r0 + rng.uniform(0.1, 1.0)));
    CHECK(std::includes(large.begin(), large.end(), small.begin(), small.end()));
  }
}

TEST_CASE("complement duality: inner(X) = all cells minus outer(complement X)") {
  const GridSpec g = square_grid(-2.0, 2.0, 5);
  SplitMix64 rng(23);
  for (int k = 0; k < 50; ++k) {
    const Region r = random_region(rng);
    const auto in = inner_cells(g, r);
    const auto out_comp = outer_cells(g, Region::complement(r));
    std::vector<std::size_t> complement;
    std::set<std::size_t> blocked(out_comp.begin(), out_comp.end());
    for (std::size_t f = 0; f < g.cell_count(); ++f)
      if (!blocked.count(f)) complement.push_back(f);
    CHECK(in == complement);
  }
}

TEST_CASE("classification is consistent with sampled membership") {
  const GridSpec g = square_grid(-2.0, 2.0, 4);
  SplitMix64 rng(41);
  for (int k = 0; k < 60; ++k) {
    const Region r = random_region(rng);
    for (std::size_t f = 0; f < g.cell_count(); ++f) {
      const Box cell = g.cell_box(g.unflatten(f));
      const Region::Rel rel = r.classify(cell);
      if (rel == Region::Rel::straddles) continue;
      for (int s = 0; s < 25; ++s) {
        const Vec p{rng.uniform(cell[0].lo, cell[0].hi),
                    rng.uniform(cell[1].lo, cell[1].hi)};
        if (rel == Region::Rel::inside) CHECK(r.contains(p));
        if (rel == Region::Rel::outside) CHECK(!r.contains(p));
      }
    }
  }
}
