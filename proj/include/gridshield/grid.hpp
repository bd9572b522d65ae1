#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gridshield/common.hpp"
#include "gridshield/geometry.hpp"

namespace gridshield {

struct GridAxis {
  double low = 0.0;
  double high = 0.0;
  std::uint32_t count = 0;

  bool operator==(const GridAxis&) const = default;
};

/// Axis-aligned regular partition of a bounded box into half-open cells.
/// Cells are [lo, hi) in every dimension, so each in-bounds point belongs
/// to exactly one cell; points at the upper bound are out of bounds.
class GridSpec {
 public:
  GridSpec() = default;
  explicit GridSpec(std::vector<GridAxis> axes);

  int dim() const { return static_cast<int>(axes_.size()); }
  const GridAxis& axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  const std::vector<GridAxis>& axes() const { return axes_; }
  std::size_t cell_count() const { return total_; }
  double diameter(int i) const {
    const GridAxis& a = axes_[static_cast<std::size_t>(i)];
    return (a.high - a.low) / static_cast<double>(a.count);
  }
  const Box& bounds() const { return bounds_; }
  bool contains(const Vec& p) const;

  CellIndex cell_of(const Vec& p) const;  // throws out_of_bounds
  std::optional<CellIndex> try_cell_of(const Vec& p) const;

  Box cell_box(const CellIndex& c) const;  // throws invalid_index
  Vec cell_center(const CellIndex& c) const;

  /// Row-major flattening: the last dimension varies fastest.
  std::size_t flatten(const CellIndex& c) const;
  CellIndex unflatten(std::size_t flat) const;

  bool valid(const CellIndex& c) const;
  bool operator==(const GridSpec&) const = default;

 private:
  std::vector<GridAxis> axes_;
  Box bounds_;
  std::size_t total_ = 0;
};

/// Cells whose box intersects X (outer approximation), as sorted flat ids.
std::vector<std::size_t> outer_cells(const GridSpec& grid, const Region& x);

/// Cells whose box is contained in X (inner approximation), as sorted flat ids.
std::vector<std::size_t> inner_cells(const GridSpec& grid, const Region& x);

}  // namespace gridshield
