#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gridshield/grid.hpp"
#include "gridshield/model.hpp"
#include "gridshield/strategy.hpp"
#include "gridshield/transform.hpp"

namespace gridshield {

/// Sampling density of the transition computation. Per cell, a regular
/// lattice of points_per_axis^d support points (corners included); per
/// support point, the disturbance extremes (all-zeros and all-ones) plus
/// random_disturbances random draws. Deterministic models use exactly one
/// (empty) disturbance sample.
struct SamplingConfig {
  int points_per_axis = 4;
  int random_disturbances = 2;
  std::uint64_t seed = 0;
};

/// Sampled cell-level transition relation: successor cells per
/// (cell, action), plus a flag marking that some sampled successor left
/// the grid box. Cells whose support points all lack preimages get empty
/// successor sets and no escape flag.
class TransitionTable {
 public:
  TransitionTable() = default;
  TransitionTable(std::size_t n_cells, int n_actions);

  std::size_t n_cells() const { return n_cells_; }
  int n_actions() const { return n_actions_; }

  std::span<const std::uint32_t> successors(std::size_t cell, int action) const {
    return entries_[cell * static_cast<std::size_t>(n_actions_) + action];
  }
  bool escapes(std::size_t cell, int action) const {
    return escapes_[cell * static_cast<std::size_t>(n_actions_) + action] != 0;
  }

  void set(std::size_t cell, int action, std::vector<std::uint32_t> succ, bool escape);

 private:
  std::size_t n_cells_ = 0;
  int n_actions_ = 0;
  std::vector<std::vector<std::uint32_t>> entries_;
  std::vector<std::uint8_t> escapes_;
};

/// Bitset over grid cells (the controllable-cell set and its iterates).
class SafeSet {
 public:
  SafeSet() = default;
  explicit SafeSet(std::size_t n, bool value = false)
      : bits_(n, value ? 1 : 0) {}

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v = true) { bits_[i] = v ? 1 : 0; }
  std::size_t count() const;

  bool operator==(const SafeSet&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Regular lattice of per_axis^d points covering a half-open box, corners
/// included; the upper face is pulled inward by 1e-9 of the diameter so all
/// points are members of the box. per_axis = 1 yields the center.
std::vector<Vec> support_points(const Box& box, int per_axis);

/// Builds the sampled labeled transition system over the grid in T.
/// Embarrassingly parallel over cells; every (cell, action) pair derives its
/// disturbance stream from (seed, cell, action), so the result is identical
/// regardless of thread count. threads = 0 selects hardware concurrency.
TransitionTable compute_transitions(const ControlModel& model, const Transform& tr,
                                    const GridSpec& grid, const SamplingConfig& cfg,
                                    int threads = 0);

/// Cells that are initially safe: an under-approximation in T of the image
/// of the safety region, excluding cells with empty preimage. Uses the
/// transform's exact classifier when available and the sampled
/// preimage-membership test otherwise.
SafeSet initial_safe(const GridSpec& grid, const Transform& tr, const Region& phi,
                     const SamplingConfig& cfg);

/// Greatest fixpoint of the controllable-cell equation: repeatedly remove
/// cells having no action whose sampled successors all stay in the set
/// (escaping counts as unsafe). Synchronous removal sweeps, so the result
/// is independent of any visit order. Terminates in at most n_cells sweeps.
SafeSet fixpoint(const TransitionTable& tt, const SafeSet& init,
                 std::size_t* sweeps = nullptr);

/// The set after exactly k removal sweeps. k = 0 returns init; the result
/// is only k-step safe and must not be used as a shield.
SafeSet bounded_fixpoint(const TransitionTable& tt, const SafeSet& init,
                         std::size_t k, std::size_t* sweeps = nullptr);

/// Per-cell bitmask of actions whose successors are all safe and
/// non-escaping; cells outside `safe` get mask 0. Every safe cell of a
/// fixpoint has at least one allowed action.
std::vector<std::uint8_t> permissive_masks(const TransitionTable& tt,
                                           const SafeSet& safe);

// ---------------------------------------------------------------------------
// Boundary extraction and polynomial fitting (transformation engineering)

/// Vertical extent of a 2-D marking per column: centers of the topmost and
/// bottommost marked cells and their average. Columns without marked cells
/// are omitted.
struct BoundaryColumn {
  double x_center;
  double upper;
  double lower;
  double mid;
};

/// Throws degenerate_marking when no column has a marked cell.
std::vector<BoundaryColumn> extract_boundaries(const SafeSet& marking,
                                               const GridSpec& grid);

/// Least-squares fit of sum_i c_i x^powers[i] through (x, y) points via the
/// normal equations. powers are the odd exponents (default callers use
/// {1, 3}). Throws singular_fit when the normal matrix is rank-deficient.
std::vector<double> fit_odd_polynomial(std::span<const std::pair<double, double>> points,
                                       std::span<const int> powers);

}  // namespace gridshield
