#include "gridshield/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "gridshield/rng.hpp"

namespace gridshield {

TransitionTable::TransitionTable(std::size_t n_cells, int n_actions)
    : n_cells_(n_cells),
      n_actions_(n_actions),
      entries_(n_cells * static_cast<std::size_t>(n_actions)),
      escapes_(n_cells * static_cast<std::size_t>(n_actions), 0) {}

void TransitionTable::set(std::size_t cell, int action,
                          std::vector<std::uint32_t> succ, bool escape) {
  const std::size_t at = cell * static_cast<std::size_t>(n_actions_) + action;
  entries_[at] = std::move(succ);
  escapes_[at] = escape ? 1 : 0;
}

std::size_t SafeSet::count() const {
  std::size_t n = 0;
  for (std::uint8_t b : bits_) n += b;
  return n;
}

std::vector<Vec> support_points(const Box& box, int per_axis) {
  if (per_axis < 1) throw config_error("support points per axis must be >= 1");
  const std::size_t d = box.size();
  std::vector<Vec> points;

  // Per-axis sample positions. Both faces are pulled inward by 1e-9 of the
  // diameter: every point is a member of the half-open box, and one-ulp
  // rounding in transform round trips cannot push an image across the cell
  // boundary it was sampled on.
  std::vector<std::vector<double>> coords(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double pad = 1e-9 * box[i].diameter();
    const double lo = box[i].lo + pad;
    const double hi = box[i].hi - pad;
    if (per_axis == 1) {
      coords[i].push_back(0.5 * (lo + hi));
    } else {
      for (int k = 0; k < per_axis; ++k)
        coords[i].push_back(lo + (hi - lo) * k / (per_axis - 1));
    }
  }

  Vec p(d);
  std::vector<int> idx(d, 0);
  for (;;) {
    for (std::size_t i = 0; i < d; ++i) p[i] = coords[i][idx[i]];
    points.push_back(p);
    std::size_t i = 0;
    while (i < d && ++idx[i] == per_axis) idx[i++] = 0;
    if (i == d) break;
  }
  return points;
}

namespace {

/// Disturbance samples for one (cell, action) pair: the two extremes plus
/// cfg.random_disturbances fresh draws per support point, all derived from
/// (seed, cell, action) so the schedule does not matter.
std::vector<Vec> disturbance_samples(int arity, const SamplingConfig& cfg,
                                     std::size_t cell, int action,
                                     std::size_t support_index) {
  std::vector<Vec> samples;
  if (arity == 0) {
    samples.emplace_back();
    return samples;
  }
  samples.push_back(Vec(static_cast<std::size_t>(arity), 0.0));
  samples.push_back(Vec(static_cast<std::size_t>(arity), 1.0));
  SplitMix64 rng(mix_seed(cfg.seed, cell * 8 + static_cast<std::size_t>(action),
                          support_index + 1));
  for (int k = 0; k < cfg.random_disturbances; ++k) {
    Vec u(static_cast<std::size_t>(arity));
    for (int i = 0; i < arity; ++i) u[i] = rng.uniform01();
    samples.push_back(std::move(u));
  }
  return samples;
}

}  // namespace

TransitionTable compute_transitions(const ControlModel& model, const Transform& tr,
                                    const GridSpec& grid, const SamplingConfig& cfg,
                                    int threads) {
  if (grid.bounds() != tr.codomain)
    throw config_error("grid box does not match the transform codomain");
  if (static_cast<int>(model.bounds.size()) != model.dim)
    throw config_error("model bounds do not match its dimension");
  if (model.bounds != tr.domain)
    throw config_error("transform domain does not match the model state box");

  const std::size_t n_cells = grid.cell_count();
  const int n_actions = static_cast<int>(model.actions.size());
  TransitionTable table(n_cells, n_actions);

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> succ;
    for (std::size_t flat = begin; flat < end; ++flat) {
      const Box cell = grid.cell_box(grid.unflatten(flat));
      const std::vector<Vec> supports = support_points(cell, cfg.points_per_axis);
      for (int a = 0; a < n_actions; ++a) {
        succ.clear();
        bool escape = false;
        for (std::size_t si = 0; si < supports.size(); ++si) {
          const Preimage pre = tr.inverse(supports[si]);
          if (pre.empty()) continue;
          const std::vector<Vec> us =
              disturbance_samples(model.disturbance_arity, cfg, flat, a, si);
          for (const Vec& s : pre) {
            for (const Vec& u : us) {
              const Vec next = model.step(s, a, as_span(u));
              // Leaving the state box counts as unsafe even when the image
              // under f would land back inside the T grid (the transform can
              // hide the escaping coordinate, e.g. the ball's height in the
              // energy space).
              if (!box_contains(model.bounds, next)) {
                escape = true;
                continue;
              }
              const Vec t = tr.forward(next);
              if (auto c = grid.try_cell_of(t))
                succ.push_back(static_cast<std::uint32_t>(grid.flatten(*c)));
              else
                escape = true;
            }
          }
        }
        std::sort(succ.begin(), succ.end());
        succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
        table.set(flat, a, std::vector<std::uint32_t>(succ.begin(), succ.end()),
                  escape);
      }
    }
  };

  int n_threads = threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min<int>(n_threads, 64);
  if (n_threads == 1 || n_cells < 256) {
    work(0, n_cells);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_cells + n_threads - 1) / n_threads;
    for (int i = 0; i < n_threads; ++i) {
      const std::size_t b = std::min(n_cells, chunk * i);
      const std::size_t e = std::min(n_cells, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return table;
}

SafeSet initial_safe(const GridSpec& grid, const Transform& tr, const Region& phi,
                     const SamplingConfig& cfg) {
  const std::size_t n = grid.cell_count();
  SafeSet safe(n, false);
  for (std::size_t flat = 0; flat < n; ++flat) {
    const Box cell = grid.cell_box(grid.unflatten(flat));
    if (tr.cell_class) {
      if (auto rel = tr.cell_class(cell, phi)) {
        safe.set(flat, *rel == Region::Rel::inside);
        continue;
      }
    }
    // Sampled under-approximation: every support point's preimage lies in
    // phi, and at least one support point has a preimage at all.
    bool any_preimage = false;
    bool all_inside = true;
    for (const Vec& t : support_points(cell, cfg.points_per_axis)) {
      const Preimage pre = tr.inverse(t);
      if (pre.empty()) continue;
      any_preimage = true;
      for (const Vec& s : pre)
        if (!phi.contains(s)) {
          all_inside = false;
          break;
        }
      if (!all_inside) break;
    }
    safe.set(flat, any_preimage && all_inside);
  }
  return safe;
}

namespace {

bool has_valid_action(const TransitionTable& tt, const SafeSet& safe,
                      std::size_t cell) {
  for (int a = 0; a < tt.n_actions(); ++a) {
    if (tt.escapes(cell, a)) continue;
    bool ok = true;
    for (std::uint32_t s : tt.successors(cell, a))
      if (!safe.test(s)) {
        ok = false;
        break;
      }
    if (ok) return true;
  }
  return false;
}

/// Synchronous removal sweeps up to max_sweeps (or until stable). After the
/// first full sweep, only predecessors of removed cells are rechecked.
SafeSet removal_iteration(const TransitionTable& tt, const SafeSet& init,
                          std::size_t max_sweeps, std::size_t* sweeps_out) {
  SafeSet safe = init;
  const std::size_t n = tt.n_cells();

  // Predecessor lists (by cell) in CSR form.
  std::vector<std::uint32_t> pred_offsets(n + 1, 0);
  for (std::size_t c = 0; c < n; ++c)
    for (int a = 0; a < tt.n_actions(); ++a)
      for (std::uint32_t s : tt.successors(c, a)) ++pred_offsets[s + 1];
  for (std::size_t i = 0; i < n; ++i) pred_offsets[i + 1] += pred_offsets[i];
  std::vector<std::uint32_t> preds(pred_offsets[n]);
  {
    std::vector<std::uint32_t> fill(pred_offsets.begin(), pred_offsets.end() - 1);
    for (std::size_t c = 0; c < n; ++c)
      for (int a = 0; a < tt.n_actions(); ++a)
        for (std::uint32_t s : tt.successors(c, a))
          preds[fill[s]++] = static_cast<std::uint32_t>(c);
  }

  std::vector<std::uint32_t> candidates;
  candidates.reserve(n);
  for (std::size_t c = 0; c < n; ++c)
    if (safe.test(c)) candidates.push_back(static_cast<std::uint32_t>(c));

  std::size_t sweeps = 0;
  std::vector<std::uint32_t> removed;
  std::vector<std::uint8_t> queued(n, 0);
  while (sweeps < max_sweeps && !candidates.empty()) {
    removed.clear();
    for (std::uint32_t c : candidates)
      if (safe.test(c) && !has_valid_action(tt, safe, c)) removed.push_back(c);
    ++sweeps;
    if (removed.empty()) break;
    for (std::uint32_t c : removed) safe.set(c, false);

    candidates.clear();
    std::fill(queued.begin(), queued.end(), 0);
    for (std::uint32_t c : removed) {
      for (std::uint32_t i = pred_offsets[c]; i < pred_offsets[c + 1]; ++i) {
        const std::uint32_t p = preds[i];
        if (safe.test(p) && !queued[p]) {
          queued[p] = 1;
          candidates.push_back(p);
        }
      }
    }
    std::sort(candidates.begin(), candidates.end());
  }
  if (sweeps_out) *sweeps_out = sweeps;
  return safe;
}

}  // namespace

SafeSet fixpoint(const TransitionTable& tt, const SafeSet& init,
                 std::size_t* sweeps) {
  return removal_iteration(tt, init, tt.n_cells() + 1, sweeps);
}

SafeSet bounded_fixpoint(const TransitionTable& tt, const SafeSet& init,
                         std::size_t k, std::size_t* sweeps) {
  return removal_iteration(tt, init, k, sweeps);
}

std::vector<std::uint8_t> permissive_masks(const TransitionTable& tt,
                                           const SafeSet& safe) {
  std::vector<std::uint8_t> masks(tt.n_cells(), 0);
  for (std::size_t c = 0; c < tt.n_cells(); ++c) {
    if (!safe.test(c)) continue;
    std::uint8_t m = 0;
    for (int a = 0; a < tt.n_actions(); ++a) {
      if (tt.escapes(c, a)) continue;
      bool ok = true;
      for (std::uint32_t s : tt.successors(c, a))
        if (!safe.test(s)) {
          ok = false;
          break;
        }
      if (ok) m |= static_cast<std::uint8_t>(1u << a);
    }
    masks[c] = m;
  }
  return masks;
}

std::vector<BoundaryColumn> extract_boundaries(const SafeSet& marking,
                                               const GridSpec& grid) {
  if (grid.dim() != 2)
    throw config_error("boundary extraction requires a 2-D grid");
  std::vector<BoundaryColumn> columns;
  const std::uint32_t nx = grid.axis(0).count, ny = grid.axis(1).count;
  for (std::uint32_t i = 0; i < nx; ++i) {
    std::int64_t top = -1, bottom = -1;
    for (std::uint32_t j = 0; j < ny; ++j) {
      if (!marking.test(grid.flatten(CellIndex{i, j}))) continue;
      if (bottom < 0) bottom = j;
      top = j;
    }
    if (bottom < 0) continue;
    const double x = grid.cell_center(CellIndex{i, 0})[0];
    const double upper =
        grid.cell_center(CellIndex{i, static_cast<std::uint32_t>(top)})[1];
    const double lower =
        grid.cell_center(CellIndex{i, static_cast<std::uint32_t>(bottom)})[1];
    columns.push_back({x, upper, lower, 0.5 * (upper + lower)});
  }
  if (columns.empty())
    throw degenerate_marking("no column contains a marked cell");
  return columns;
}

std::vector<double> fit_odd_polynomial(std::span<const std::pair<double, double>> points,
                                       std::span<const int> powers) {
  const std::size_t k = powers.size();
  if (points.size() < k)
    throw singular_fit("need at least as many points as basis functions");

  // Normal equations A^T A c = A^T y for the design matrix A with columns
  // x^powers[j], solved by Gaussian elimination with partial pivoting.
  std::vector<double> ata(k * k, 0.0), aty(k, 0.0);
  for (const auto& [x, y] : points) {
    boost::container::small_vector<double, 4> row(k);
    for (std::size_t j = 0; j < k; ++j) row[j] = std::pow(x, powers[j]);
    for (std::size_t i = 0; i < k; ++i) {
      aty[i] += row[i] * y;
      for (std::size_t j = 0; j < k; ++j) ata[i * k + j] += row[i] * row[j];
    }
  }

  std::vector<double> c(k, 0.0);
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(ata[r * k + col]) > std::abs(ata[pivot * k + col])) pivot = r;
    if (std::abs(ata[pivot * k + col]) < 1e-12)
      throw singular_fit("normal matrix is rank-deficient");
    if (pivot != col) {
      for (std::size_t j = 0; j < k; ++j)
        std::swap(ata[pivot * k + j], ata[col * k + j]);
      std::swap(aty[pivot], aty[col]);
    }
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = ata[r * k + col] / ata[col * k + col];
      for (std::size_t j = col; j < k; ++j) ata[r * k + j] -= f * ata[col * k + j];
      aty[r] -= f * aty[col];
    }
  }
  for (std::size_t i = k; i-- > 0;) {
    double acc = aty[i];
    for (std::size_t j = i + 1; j < k; ++j) acc -= ata[i * k + j] * c[j];
    c[i] = acc / ata[i * k + i];
  }
  return c;
}

}  // namespace gridshield
