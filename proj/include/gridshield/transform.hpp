#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridshield/common.hpp"
#include "gridshield/geometry.hpp"
#include "gridshield/model.hpp"

namespace gridshield {

/// Preimage sample set; inline storage for the injective (single-point) case.
using Preimage = boost::container::small_vector<Vec, 1>;

/// State-space transformation f: S -> T with a set-valued inverse.
///
/// Invariants: every s' in inverse(forward(s)) maps back to forward(s)
/// within 1e-9; inverse(t) is empty exactly when t has no preimage in the
/// S box. All built-in transforms are injective on their domains; the
/// set-valued interface exists so non-injective transforms can be added.
struct Transform {
  std::string name;
  std::uint32_t tag = 0;
  std::vector<double> params;  // serialized parameter list (see file format)
  Box domain;                  // S box
  Box codomain;                // T box
  bool injective = true;
  std::function<Vec(const Vec&)> forward;
  std::function<Preimage(const Vec&)> inverse;

  /// Exact classification of a T-cell's preimage against a region in S,
  /// when the transform/region pair supports it (empty preimage classifies
  /// as outside). nullopt means the caller must fall back to sampling.
  std::function<std::optional<Region::Rel>(const Box& tcell, const Region& phi)>
      cell_class;
};

inline constexpr std::uint32_t kTransformIdentity = 0;
inline constexpr std::uint32_t kTransformPolar = 1;
inline constexpr std::uint32_t kTransformEnergy = 2;
inline constexpr std::uint32_t kTransformPolyOffset = 3;

Transform identity_transform(Box s);

/// (x, y) -> (theta, r) with theta in [-pi, pi). Defined on s_box minus an
/// epsilon disc at the origin; preimages outside the S box are discarded.
Transform polar_transform(Box s_box, double r_max);

/// (v, p) -> (E, v) with mechanical energy E = m g p + m v^2 / 2.
Transform energy_transform(Box s_box, double mass, double gravity, double e_max);

/// (theta, omega) -> (theta, omega - p(theta)) for an odd polynomial p;
/// odd_coeffs holds the coefficients of theta^1, theta^3, theta^5, ...
Transform poly_offset_transform(Box s_box, std::vector<double> odd_coeffs);

double eval_odd_polynomial(std::span<const double> odd_coeffs, double x);

/// Rebuilds a transform from its serialized tag + parameters; the grid box
/// of the strategy it was stored with supplies the codomain.
Transform transform_from_tag(std::uint32_t tag, std::span<const double> params,
                             const Box& grid_box);

/// delta_T(t, a): image under f of the original successors of every
/// preimage point of t, one successor per disturbance sample. Empty when
/// t has no preimage.
std::vector<Vec> transformed_successor(const ControlModel& model,
                                       const Transform& tr, const Vec& t,
                                       int action,
                                       std::span<const Vec> disturbances);

}  // namespace gridshield
