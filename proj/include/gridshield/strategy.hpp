#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridshield/grid.hpp"
#include "gridshield/transform.hpp"

namespace gridshield {

/// Most-permissive safety strategy over a grid in the transformed space T:
/// one allowed-action bitmask per cell (bit i = action i allowed).
/// A nonzero mask marks a controllable cell. Immutable after construction;
/// safe for shared parallel reads.
struct Strategy {
  GridSpec grid;                     // over T
  std::vector<std::string> actions;  // at most 8
  Transform transform;               // f: S -> T
  std::vector<std::uint8_t> masks;   // row-major cell order

  std::uint8_t mask_at(std::size_t flat) const { return masks[flat]; }
  std::size_t controllable_count() const;
};

inline bool mask_allows(std::uint8_t mask, int action) {
  return (mask >> action) & 1u;
}
int lowest_action(std::uint8_t mask);  // -1 when the mask is empty

/// Allowed actions at a point of T: the mask of the cell containing it.
std::uint8_t allowed_in_T(const Strategy& st, const Vec& t);  // throws out_of_bounds

/// Allowed actions at a point of S: the mask of the cell containing f(s).
/// Points mapping outside the T grid have no allowed actions.
std::uint8_t allowed_in_S(const Strategy& st, const Vec& s);  // throws out_of_bounds

/// Shield filtering: pass the proposed action through when allowed,
/// otherwise fall back to the lowest-index allowed action.
/// Throws uncontrollable when no action is allowed at s.
int filter_action(const Strategy& st, const Vec& s, int proposed);

// Binary shield file (little-endian): magic "SHLD", format version u32,
// dimension u32, per-dim (f64 low, f64 high, u64 count), action count u32
// with length-prefixed UTF-8 names, transform tag u32 + f64 parameter list,
// then the row-major u8 mask array.
void save_strategy(const Strategy& st, const std::filesystem::path& path);
Strategy load_strategy(const std::filesystem::path& path);

}  // namespace gridshield
