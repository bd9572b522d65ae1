#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "gridshield/common.hpp"

namespace gridshield {

/// Half-open interval [lo, hi).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double diameter() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x < hi; }
  bool operator==(const Interval&) const = default;
};

/// Axis-aligned half-open box, one interval per dimension.
using Box = boost::container::small_vector<Interval, 4>;

bool box_contains(const Box& b, const Vec& p);
Vec box_center(const Box& b);

/// Set of states described by geometric primitives (discs, half-planes,
/// closed boxes) closed under union, intersection and complement.
///
/// Point membership is exact. Classification against an axis-aligned cell
/// box is exact for primitives (nearest-point / farthest-corner tests for
/// discs, corner support tests for half-planes) and propagated three-valued
/// through the combinators.
class Region {
 public:
  enum class Rel { outside, straddles, inside };

  struct Disc {
    Vec center;
    double radius;
  };
  /// All points x with dot(normal, x) <= offset.
  struct HalfPlane {
    Vec normal;
    double offset;
  };
  /// Half-open box [lo_i, hi_i), following the grid cell convention.
  struct BoxSet {
    Box bounds;
  };

  Region() = default;

  static Region all();
  static Region empty();
  static Region disc(Vec center, double radius);
  static Region half_plane(Vec normal, double offset);
  static Region box(Box bounds);
  static Region union_of(std::vector<Region> parts);
  static Region intersection_of(std::vector<Region> parts);
  static Region complement(Region r);

  bool contains(const Vec& p) const;

  /// Classify a half-open cell box against this region.
  Rel classify(const Box& cell) const;

  /// Custom primitive classification (used by transforms that test a
  /// transformed cell's preimage against a region in the original space).
  /// Returns nullopt if an encountered primitive has no handler.
  struct PrimClassifier {
    std::function<std::optional<Rel>(const Disc&)> disc;
    std::function<std::optional<Rel>(const HalfPlane&)> half_plane;
    std::function<std::optional<Rel>(const BoxSet&)> box;
  };
  std::optional<Rel> classify_with(const PrimClassifier& pc) const;

 private:
  enum class Kind { all, disc, half_plane, box, union_of, intersection_of, complement };

  struct Node;
  explicit Region(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

inline Region::Rel flip(Region::Rel r) {
  using Rel = Region::Rel;
  if (r == Rel::inside) return Rel::outside;
  if (r == Rel::outside) return Rel::inside;
  return Rel::straddles;
}

}  // namespace gridshield
