#include "gridshield/geometry.hpp"

#include <cmath>

namespace gridshield {

bool box_contains(const Box& b, const Vec& p) {
  if (p.size() != b.size()) return false;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!b[i].contains(p[i])) return false;
  return true;
}

Vec box_center(const Box& b) {
  Vec c(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) c[i] = 0.5 * (b[i].lo + b[i].hi);
  return c;
}

struct Region::Node {
  Kind kind = Kind::all;
  Disc disc{{}, 0.0};
  HalfPlane half_plane{{}, 0.0};
  BoxSet box;
  std::vector<Region> children;
};

Region Region::all() {
  auto n = std::make_shared<Node>();
  n->kind = Kind::all;
  return Region(std::move(n));
}

Region Region::empty() { return complement(all()); }

Region Region::disc(Vec center, double radius) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::disc;
  n->disc = Disc{std::move(center), radius};
  return Region(std::move(n));
}

Region Region::half_plane(Vec normal, double offset) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::half_plane;
  n->half_plane = HalfPlane{std::move(normal), offset};
  return Region(std::move(n));
}

Region Region::box(Box bounds) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::box;
  n->box = BoxSet{std::move(bounds)};
  return Region(std::move(n));
}

Region Region::union_of(std::vector<Region> parts) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::union_of;
  n->children = std::move(parts);
  return Region(std::move(n));
}

Region Region::intersection_of(std::vector<Region> parts) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::intersection_of;
  n->children = std::move(parts);
  return Region(std::move(n));
}

Region Region::complement(Region r) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::complement;
  n->children.push_back(std::move(r));
  return Region(std::move(n));
}

namespace {

double sq(double x) { return x * x; }

double dist2_point_box(const Vec& p, const Box& b) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (p[i] < b[i].lo)
      d2 += sq(b[i].lo - p[i]);
    else if (p[i] > b[i].hi)
      d2 += sq(p[i] - b[i].hi);
  }
  return d2;
}

double far2_point_box(const Vec& p, const Box& b) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i)
    d2 += sq(std::max(std::abs(p[i] - b[i].lo), std::abs(b[i].hi - p[i])));
  return d2;
}

using Rel = Region::Rel;

Rel classify_disc(const Region::Disc& d, const Box& cell) {
  const double r2 = sq(d.radius);
  if (dist2_point_box(d.center, cell) > r2) return Rel::outside;
  if (far2_point_box(d.center, cell) <= r2) return Rel::inside;
  return Rel::straddles;
}

Rel classify_half_plane(const Region::HalfPlane& h, const Box& cell) {
  // Support values of dot(n, x) over the (closed) cell.
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const double a = h.normal[i] * cell[i].lo;
    const double b = h.normal[i] * cell[i].hi;
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  if (hi <= h.offset) return Rel::inside;
  if (lo > h.offset) return Rel::outside;
  return Rel::straddles;
}

Rel classify_box(const Region::BoxSet& bs, const Box& cell) {
  // Half-open box versus half-open cell. Comparisons tolerate 1e-9 of the
  // cell diameter so markings stay stable when region faces coincide with
  // cell boundaries (the boundaries themselves carry rounding noise).
  bool inside = true;
  for (std::size_t i = 0; i < cell.size(); ++i) {
    const Interval& b = bs.bounds[i];
    const Interval& c = cell[i];
    const double eps = 1e-9 * c.diameter();
    if (b.lo >= c.hi - eps || b.hi <= c.lo + eps) return Rel::outside;
    if (b.lo > c.lo + eps || b.hi < c.hi - eps) inside = false;
  }
  return inside ? Rel::inside : Rel::straddles;
}

}  // namespace

bool Region::contains(const Vec& p) const {
  if (!node_) return false;
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::all:
      return true;
    case Kind::disc: {
      double d2 = 0.0;
      for (std::size_t i = 0; i < n.disc.center.size(); ++i)
        d2 += sq(p[i] - n.disc.center[i]);
      return d2 <= sq(n.disc.radius);
    }
    case Kind::half_plane: {
      double dot = 0.0;
      for (std::size_t i = 0; i < n.half_plane.normal.size(); ++i)
        dot += n.half_plane.normal[i] * p[i];
      return dot <= n.half_plane.offset;
    }
    case Kind::box: {
      for (std::size_t i = 0; i < n.box.bounds.size(); ++i)
        if (p[i] < n.box.bounds[i].lo || p[i] >= n.box.bounds[i].hi) return false;
      return true;
    }
    case Kind::union_of: {
      for (const Region& c : n.children)
        if (c.contains(p)) return true;
      return false;
    }
    case Kind::intersection_of: {
      for (const Region& c : n.children)
        if (!c.contains(p)) return false;
      return true;
    }
    case Kind::complement:
      return !n.children[0].contains(p);
  }
  return false;
}

Region::Rel Region::classify(const Box& cell) const {
  if (!node_) return Rel::outside;
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::all:
      return Rel::inside;
    case Kind::disc:
      return classify_disc(n.disc, cell);
    case Kind::half_plane:
      return classify_half_plane(n.half_plane, cell);
    case Kind::box:
      return classify_box(n.box, cell);
    case Kind::union_of: {
      bool all_outside = true;
      for (const Region& c : n.children) {
        Rel r = c.classify(cell);
        if (r == Rel::inside) return Rel::inside;
        if (r != Rel::outside) all_outside = false;
      }
      return all_outside ? Rel::outside : Rel::straddles;
    }
    case Kind::intersection_of: {
      bool all_inside = true;
      for (const Region& c : n.children) {
        Rel r = c.classify(cell);
        if (r == Rel::outside) return Rel::outside;
        if (r != Rel::inside) all_inside = false;
      }
      return all_inside ? Rel::inside : Rel::straddles;
    }
    case Kind::complement:
      return flip(n.children[0].classify(cell));
  }
  return Rel::straddles;
}

std::optional<Region::Rel> Region::classify_with(const PrimClassifier& pc) const {
  if (!node_) return Rel::outside;
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::all:
      return Rel::inside;
    case Kind::disc:
      return pc.disc ? pc.disc(n.disc) : std::nullopt;
    case Kind::half_plane:
      return pc.half_plane ? pc.half_plane(n.half_plane) : std::nullopt;
    case Kind::box:
      return pc.box ? pc.box(n.box) : std::nullopt;
    case Kind::union_of: {
      bool all_outside = true;
      bool saw_straddle = false;
      for (const Region& c : n.children) {
        auto r = c.classify_with(pc);
        if (!r) return std::nullopt;
        if (*r == Rel::inside) return Rel::inside;
        if (*r != Rel::outside) saw_straddle = true;
        all_outside = all_outside && *r == Rel::outside;
      }
      (void)saw_straddle;
      return all_outside ? Rel::outside : Rel::straddles;
    }
    case Kind::intersection_of: {
      bool all_inside = true;
      for (const Region& c : n.children) {
        auto r = c.classify_with(pc);
        if (!r) return std::nullopt;
        if (*r == Rel::outside) return Rel::outside;
        if (*r != Rel::inside) all_inside = false;
      }
      return all_inside ? Rel::inside : Rel::straddles;
    }
    case Kind::complement: {
      auto r = n.children[0].classify_with(pc);
      if (!r) return std::nullopt;
      return flip(*r);
    }
  }
  return std::nullopt;
}

}  // namespace gridshield
