#include "gridshield/grid.hpp"

#include <cmath>
#include <string>

namespace gridshield {

GridSpec::GridSpec(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw config_error("grid must have dimension >= 1");
  total_ = 1;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const GridAxis& a = axes_[i];
    if (!(a.low < a.high))
      throw config_error("grid axis " + std::to_string(i) + ": low must be < high");
    if (a.count == 0)
      throw config_error("grid axis " + std::to_string(i) + ": count must be positive");
    bounds_.push_back(Interval{a.low, a.high});
    total_ *= a.count;
  }
}

bool GridSpec::contains(const Vec& p) const {
  return p.size() == axes_.size() && box_contains(bounds_, p);
}

std::optional<CellIndex> GridSpec::try_cell_of(const Vec& p) const {
  if (p.size() != axes_.size()) return std::nullopt;
  CellIndex c(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const GridAxis& a = axes_[i];
    if (p[i] < a.low || p[i] >= a.high) return std::nullopt;
    double pos = (p[i] - a.low) / ((a.high - a.low) / static_cast<double>(a.count));
    auto idx = static_cast<std::int64_t>(std::floor(pos));
    // Guard against rounding right at the upper bound.
    if (idx >= a.count) idx = a.count - 1;
    if (idx < 0) idx = 0;
    c[i] = static_cast<std::uint32_t>(idx);
  }
  return c;
}

CellIndex GridSpec::cell_of(const Vec& p) const {
  auto c = try_cell_of(p);
  if (!c) throw out_of_bounds("point outside the grid box");
  return *c;
}

bool GridSpec::valid(const CellIndex& c) const {
  if (c.size() != axes_.size()) return false;
  for (std::size_t i = 0; i < axes_.size(); ++i)
    if (c[i] >= axes_[i].count) return false;
  return true;
}

Box GridSpec::cell_box(const CellIndex& c) const {
  if (!valid(c)) throw invalid_index("cell index invalid for this grid");
  Box b(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const GridAxis& a = axes_[i];
    const double d = (a.high - a.low) / static_cast<double>(a.count);
    b[i] = Interval{a.low + d * c[i], a.low + d * (c[i] + 1)};
  }
  return b;
}

Vec GridSpec::cell_center(const CellIndex& c) const {
  if (!valid(c)) throw invalid_index("cell index invalid for this grid");
  Vec p(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    const GridAxis& a = axes_[i];
    const double d = (a.high - a.low) / static_cast<double>(a.count);
    p[i] = a.low + d * (c[i] + 0.5);
  }
  return p;
}

std::size_t GridSpec::flatten(const CellIndex& c) const {
  if (!valid(c)) throw invalid_index("cell index invalid for this grid");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < axes_.size(); ++i) flat = flat * axes_[i].count + c[i];
  return flat;
}

CellIndex GridSpec::unflatten(std::size_t flat) const {
  if (flat >= total_) throw invalid_index("flat cell id out of range");
  CellIndex c(axes_.size());
  for (std::size_t i = axes_.size(); i-- > 0;) {
    c[i] = static_cast<std::uint32_t>(flat % axes_[i].count);
    flat /= axes_[i].count;
  }
  return c;
}

std::vector<std::size_t> outer_cells(const GridSpec& grid, const Region& x) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < grid.cell_count(); ++f)
    if (x.classify(grid.cell_box(grid.unflatten(f))) != Region::Rel::outside)
      out.push_back(f);
  return out;
}

std::vector<std::size_t> inner_cells(const GridSpec& grid, const Region& x) {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < grid.cell_count(); ++f)
    if (x.classify(grid.cell_box(grid.unflatten(f))) == Region::Rel::inside)
      out.push_back(f);
  return out;
}

}  // namespace gridshield
