#include "gridshield/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gridshield {

namespace {

constexpr double kPi = std::numbers::pi;


double dist_point_segment(double px, double py, double ax, double ay, double bx,
                          double by) {
  const double abx = bx - ax, aby = by - ay;
  const double len2 = abx * abx + aby * aby;
  double t = len2 > 0.0 ? ((px - ax) * abx + (py - ay) * aby) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * abx), py - (ay + t * aby));
}

/// Whether angle phi falls inside [t1, t2] modulo 2*pi.
bool angle_in(double phi, double t1, double t2) {
  double d = std::fmod(phi - t1, 2.0 * kPi);
  if (d < 0.0) d += 2.0 * kPi;
  return d <= t2 - t1;
}

/// Classification of the annular sector {r e(theta) : theta in [t1,t2],
/// r in [r1,r2]} against the closed disc around c with radius R. Distance
/// extrema over the sector are computed in closed form.
Region::Rel sector_vs_disc(double t1, double t2, double r1, double r2,
                           const Vec& c, double R) {
  const double rho = std::hypot(c[0], c[1]);
  double dmin, dmax;
  if (rho < 1e-300) {
    dmin = r1;
    dmax = r2;
  } else {
    const double alpha = std::atan2(c[1], c[0]);
    if (angle_in(alpha, t1, t2)) {
      dmin = std::max({0.0, r1 - rho, rho - r2});
    } else {
      const double d1 = dist_point_segment(c[0], c[1], r1 * std::cos(t1),
                                           r1 * std::sin(t1), r2 * std::cos(t1),
                                           r2 * std::sin(t1));
      const double d2 = dist_point_segment(c[0], c[1], r1 * std::cos(t2),
                                           r1 * std::sin(t2), r2 * std::cos(t2),
                                           r2 * std::sin(t2));
      dmin = std::min(d1, d2);
    }
    dmax = 0.0;
    for (double r : {r1, r2})
      for (double t : {t1, t2})
        dmax = std::max(dmax, std::hypot(r * std::cos(t) - c[0],
                                         r * std::sin(t) - c[1]));
    if (angle_in(alpha + kPi, t1, t2)) dmax = std::max(dmax, rho + r2);
  }
  if (dmin > R) return Region::Rel::outside;
  if (dmax <= R) return Region::Rel::inside;
  return Region::Rel::straddles;
}

struct AbsRange {
  double lo, hi;  // range of |v| over an interval
};

AbsRange abs_range(double a, double b) {
  if (a <= 0.0 && b >= 0.0) return {0.0, std::max(-a, b)};
  return {std::min(std::abs(a), std::abs(b)), std::max(std::abs(a), std::abs(b))};
}

}  // namespace

double eval_odd_polynomial(std::span<const double> odd_coeffs, double x) {
  double acc = 0.0;
  const double x2 = x * x;
  double pw = x;
  for (double c : odd_coeffs) {
    acc += c * pw;
    pw *= x2;
  }
  return acc;
}

// ---------------------------------------------------------------------------

Transform identity_transform(Box s) {
  Transform t;
  t.name = "identity";
  t.tag = kTransformIdentity;
  t.domain = s;
  t.codomain = s;
  t.injective = true;
  t.forward = [](const Vec& p) { return p; };
  Box dom = s;
  t.inverse = [dom](const Vec& p) {
    return box_contains(dom, p) ? Preimage{p} : Preimage{};
  };
  t.cell_class = [](const Box& cell, const Region& phi) {
    return std::optional<Region::Rel>(phi.classify(cell));
  };
  return t;
}

Transform polar_transform(Box s_box, double r_max) {
  if (s_box.size() != 2) throw config_error("polar transform needs a 2-D state box");
  Transform t;
  t.name = "polar";
  t.tag = kTransformPolar;
  t.params = {r_max, s_box[0].lo, s_box[0].hi, s_box[1].lo, s_box[1].hi};
  t.domain = s_box;
  t.codomain = Box{{-kPi, kPi}, {0.0, r_max}};
  t.injective = true;
  t.forward = [](const Vec& s) {
    double theta = std::atan2(s[1], s[0]);
    if (theta >= kPi) theta -= 2.0 * kPi;  // keep the angle in [-pi, pi)
    return Vec{theta, std::hypot(s[0], s[1])};
  };
  Box dom = s_box;
  t.inverse = [dom](const Vec& p) {
    Vec s{p[1] * std::cos(p[0]), p[1] * std::sin(p[0])};
    return box_contains(dom, s) ? Preimage{s} : Preimage{};
  };

  // Exact initial marking works when every sector with r < r_max stays
  // inside the S box (origin-centered inradius covers r_max).
  const bool origin_inside = s_box[0].lo < 0.0 && s_box[0].hi > 0.0 &&
                             s_box[1].lo < 0.0 && s_box[1].hi > 0.0;
  const double inradius =
      origin_inside ? std::min({-s_box[0].lo, s_box[0].hi, -s_box[1].lo, s_box[1].hi})
                    : 0.0;
  if (inradius >= r_max) {
    t.cell_class = [](const Box& cell, const Region& phi) {
      Region::PrimClassifier pc;
      pc.disc = [&cell](const Region::Disc& d) {
        return std::optional<Region::Rel>(sector_vs_disc(
            cell[0].lo, cell[0].hi, cell[1].lo, cell[1].hi, d.center, d.radius));
      };
      return phi.classify_with(pc);
    };
  }
  return t;
}

Transform energy_transform(Box s_box, double mass, double gravity, double e_max) {
  if (s_box.size() != 2) throw config_error("energy transform needs a 2-D state box");
  const double m = mass, g = gravity;
  Transform t;
  t.name = "energy";
  t.tag = kTransformEnergy;
  t.params = {m, g, s_box[0].lo, s_box[0].hi, s_box[1].lo, s_box[1].hi};
  t.domain = s_box;
  t.codomain = Box{{0.0, e_max}, {s_box[0].lo, s_box[0].hi}};
  t.injective = true;
  t.forward = [m, g](const Vec& s) {
    return Vec{m * g * s[1] + 0.5 * m * s[0] * s[0], s[0]};
  };
  Box dom = s_box;
  t.inverse = [m, g, dom](const Vec& p) {
    Vec s{p[1], (p[0] - 0.5 * m * p[1] * p[1]) / (m * g)};
    return box_contains(dom, s) ? Preimage{s} : Preimage{};
  };

  // Exact classification of a T-cell's preimage patch against box-shaped
  // regions. The patch is fiberwise a p-interval over v; both fiber bounds
  // decrease in |v|, which makes all extrema attainable in closed form.
  const Interval sv{s_box[0].lo, s_box[0].hi};
  const Interval sp{s_box[1].lo, s_box[1].hi};
  t.cell_class = [m, g, sv, sp](const Box& cell,
                                const Region& phi) -> std::optional<Region::Rel> {
    const double e1 = cell[0].lo, e2 = cell[0].hi;
    const double vlo = std::max(cell[1].lo, sv.lo), vhi = std::min(cell[1].hi, sv.hi);
    if (vlo > vhi) return Region::Rel::outside;  // empty preimage

    // |v| threshold for p_low(a) <= q (always when negative).
    auto speed_min = [&](double q) {
      const double a2 = 2.0 * (e1 - m * g * q) / m;
      return a2 <= 0.0 ? 0.0 : std::sqrt(a2);
    };
    // |v| threshold for p_high(a) >= q; returns -1 when unsatisfiable.
    auto speed_max = [&](double q) {
      const double a2 = 2.0 * (e2 - m * g * q) / m;
      return a2 < 0.0 ? -1.0 : std::sqrt(a2);
    };
    auto band = [&](double v_a, double v_b, double q_hi,
                    double q_lo) -> std::optional<AbsRange> {
      if (v_a > v_b) return std::nullopt;
      const AbsRange ar = abs_range(v_a, v_b);
      const double hi_cap = speed_max(q_lo);
      if (hi_cap < 0.0) return std::nullopt;
      const double lo = std::max(ar.lo, speed_min(q_hi));
      const double hi = std::min(ar.hi, hi_cap);
      if (lo > hi) return std::nullopt;
      return AbsRange{lo, hi};
    };

    auto nonempty = band(vlo, vhi, sp.hi, sp.lo);
    if (!nonempty) return Region::Rel::outside;

    auto p_low = [&](double a) { return (e1 - 0.5 * m * a * a) / (m * g); };
    auto p_high = [&](double a) { return (e2 - 0.5 * m * a * a) / (m * g); };

    Region::PrimClassifier pc;
    pc.box = [&](const Region::BoxSet& b) -> std::optional<Region::Rel> {
      const Interval bv = b.bounds[0], bp = b.bounds[1];
      const double qlo = std::max(sp.lo, bp.lo), qhi = std::min(sp.hi, bp.hi);
      bool intersects = false;
      if (qlo <= qhi)
        intersects = band(std::max(vlo, bv.lo), std::min(vhi, bv.hi), qhi, qlo)
                         .has_value();
      if (!intersects) return Region::Rel::outside;

      // Containment: every v with a nonempty fiber lies in bv, and every
      // clamped fiber lies in bp.
      const double va = speed_min(sp.hi), vb = speed_max(sp.lo);
      bool v_contained = true;
      for (auto [a, b2] : {std::pair{std::max(vlo, -vb), std::min(vhi, -va)},
                           std::pair{std::max(vlo, va), std::min(vhi, vb)}}) {
        if (a > b2) continue;
        if (a < bv.lo || b2 > bv.hi) v_contained = false;
      }
      const bool p_contained =
          std::max(p_low(nonempty->hi), sp.lo) >= bp.lo &&
          std::min(p_high(nonempty->lo), sp.hi) <= bp.hi;
      if (v_contained && p_contained) return Region::Rel::inside;
      return Region::Rel::straddles;
    };
    return phi.classify_with(pc);
  };
  return t;
}

Transform poly_offset_transform(Box s_box, std::vector<double> odd_coeffs) {
  if (s_box.size() != 2)
    throw config_error("poly-offset transform needs a 2-D state box");
  Transform t;
  t.name = "poly_offset";
  t.tag = kTransformPolyOffset;
  t.params = odd_coeffs;
  t.domain = s_box;
  t.codomain = s_box;
  t.injective = true;
  std::vector<double> cs = odd_coeffs;
  t.forward = [cs](const Vec& s) {
    return Vec{s[0], s[1] - eval_odd_polynomial(cs, s[0])};
  };
  Box dom = s_box;
  t.inverse = [cs, dom](const Vec& p) {
    Vec s{p[0], p[1] + eval_odd_polynomial(cs, p[0])};
    return box_contains(dom, s) ? Preimage{s} : Preimage{};
  };

  if (cs.size() <= 2) {
    // Range of the (at most cubic) polynomial over an interval: endpoints
    // plus interior critical points.
    auto poly_range = [cs](double a, double b) {
      double lo = std::min(eval_odd_polynomial(cs, a), eval_odd_polynomial(cs, b));
      double hi = std::max(eval_odd_polynomial(cs, a), eval_odd_polynomial(cs, b));
      const double c1 = cs.empty() ? 0.0 : cs[0];
      const double c3 = cs.size() > 1 ? cs[1] : 0.0;
      if (c3 != 0.0 && -c1 / (3.0 * c3) > 0.0) {
        const double root = std::sqrt(-c1 / (3.0 * c3));
        for (double x : {root, -root})
          if (x > a && x < b) {
            const double y = eval_odd_polynomial(cs, x);
            lo = std::min(lo, y);
            hi = std::max(hi, y);
          }
      }
      return Interval{lo, hi};
    };
    const Interval st{s_box[0].lo, s_box[0].hi};
    const Interval sw{s_box[1].lo, s_box[1].hi};
    t.cell_class = [poly_range, st, sw](
                       const Box& cell,
                       const Region& phi) -> std::optional<Region::Rel> {
      const double t1 = std::max(cell[0].lo, st.lo), t2 = std::min(cell[0].hi, st.hi);
      const double z1 = cell[1].lo, z2 = cell[1].hi;
      if (t1 > t2) return Region::Rel::outside;
      const Interval pr = poly_range(t1, t2);
      if (z1 + pr.lo > sw.hi || z2 + pr.hi < sw.lo)
        return Region::Rel::outside;  // empty preimage

      Region::PrimClassifier pc;
      pc.box = [&](const Region::BoxSet& b) -> std::optional<Region::Rel> {
        const Interval bt = b.bounds[0], bw = b.bounds[1];
        // same boundary tolerance as the grid-level box classification
        const double eps = 1e-9 * (t2 - t1);
        const double i1 = std::max(t1, bt.lo), i2 = std::min(t2, bt.hi);
        bool intersects = false;
        if (i1 <= i2 && std::max(sw.lo, bw.lo) <= std::min(sw.hi, bw.hi)) {
          const Interval ipr = poly_range(i1, i2);
          const double wlo = std::max(sw.lo, bw.lo) - z2;
          const double whi = std::min(sw.hi, bw.hi) - z1;
          intersects = ipr.lo <= whi && ipr.hi >= wlo;
        }
        if (!intersects) return Region::Rel::outside;
        const bool theta_contained = t1 >= bt.lo - eps && t2 <= bt.hi + eps;
        const bool omega_contained = std::max(z1 + pr.lo, sw.lo) >= bw.lo &&
                                     std::min(z2 + pr.hi, sw.hi) <= bw.hi;
        if (theta_contained && omega_contained) return Region::Rel::inside;
        return Region::Rel::straddles;
      };
      return phi.classify_with(pc);
    };
  }
  return t;
}

Transform transform_from_tag(std::uint32_t tag, std::span<const double> params,
                             const Box& grid_box) {
  switch (tag) {
    case kTransformIdentity:
      return identity_transform(grid_box);
    case kTransformPolar: {
      if (params.size() != 5) throw io_error("polar transform expects 5 parameters");
      Box s{{params[1], params[2]}, {params[3], params[4]}};
      return polar_transform(s, params[0]);
    }
    case kTransformEnergy: {
      if (params.size() != 6) throw io_error("energy transform expects 6 parameters");
      Box s{{params[2], params[3]}, {params[4], params[5]}};
      if (grid_box.size() < 2) throw io_error("energy transform expects >= 2 grid dims");
      return energy_transform(s, params[0], params[1], grid_box[0].hi);
    }
    case kTransformPolyOffset: {
      if (grid_box.size() < 2)
        throw io_error("poly-offset transform expects >= 2 grid dims");
      return poly_offset_transform(Box{grid_box[0], grid_box[1]},
                                   std::vector<double>(params.begin(), params.end()));
    }
    default:
      throw io_error("unknown transform tag " + std::to_string(tag));
  }
}

std::vector<Vec> transformed_successor(const ControlModel& model,
                                       const Transform& tr, const Vec& t,
                                       int action,
                                       std::span<const Vec> disturbances) {
  std::vector<Vec> out;
  const Preimage pre = tr.inverse(t);
  static const Vec kNoDisturbance{};
  for (const Vec& s : pre) {
    if (disturbances.empty()) {
      out.push_back(tr.forward(
          model.step(s, action, as_span(kNoDisturbance))));
      continue;
    }
    for (const Vec& u : disturbances)
      out.push_back(tr.forward(model.step(s, action, as_span(u))));
  }
  return out;
}

}  // namespace gridshield
