#pragma once

#include <boost/container/small_vector.hpp>

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace gridshield {

/// State-space point. Inline storage covers the 4-D cart-pole; larger
/// dimensions spill to the heap.
using Vec = boost::container::small_vector<double, 4>;

inline std::span<const double> as_span(const Vec& v) {
  return {v.data(), v.size()};
}

/// Per-dimension integer cell coordinates of a grid cell.
using CellIndex = boost::container::small_vector<std::uint32_t, 4>;

struct out_of_bounds : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_index : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct singular_fit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct degenerate_marking : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown when a shield is queried in a state with no allowed action.
struct uncontrollable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gridshield
