// Test shapes with exact support functions, the penetration integral and
// convex-hull assembly from supporting half-planes.

#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "penclose/core.hpp"

namespace penclose {

struct Disk {
  Vec2 center;
  double radius = 1.0;
};

/// Strictly convex polygon, vertices counterclockwise.
struct ConvexPolygon {
  std::vector<Vec2> vertices;
};

using ShapePart = std::variant<Disk, ConvexPolygon>;

namespace detail {

inline double support(const ShapePart& part, Vec2 rho) {
  if (const auto* d = std::get_if<Disk>(&part)) return dot(d->center, rho) + d->radius * norm(rho);
  const auto& poly = std::get<ConvexPolygon>(part);
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec2& v : poly.vertices) best = std::max(best, dot(v, rho));
  return best;
}

inline bool contains(const ShapePart& part, Vec2 x) {
  if (const auto* d = std::get_if<Disk>(&part)) return norm2(x - d->center) < d->radius * d->radius;
  const auto& v = std::get<ConvexPolygon>(part).vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 a = v[i];
    const Vec2 b = v[(i + 1) % v.size()];
    if (cross(b - a, x - a) <= 0.0) return false;
  }
  return true;
}

inline double point_segment_distance(Vec2 x, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = norm2(ab);
  double s = len2 > 0.0 ? dot(x - a, ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return norm(x - (a + s * ab));
}

/// Distance from x to the closed convex polygon region (0 inside).
inline double point_polygon_distance(Vec2 x, const std::vector<Vec2>& v) {
  bool inside = v.size() >= 3;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec2 a = v[i];
    const Vec2 b = v[(i + 1) % v.size()];
    if (cross(b - a, x - a) < 0.0) inside = false;
    best = std::min(best, point_segment_distance(x, a, b));
  }
  return inside ? 0.0 : best;
}

inline bool separated(const ShapePart& lhs, const ShapePart& rhs) {
  const auto* d1 = std::get_if<Disk>(&lhs);
  const auto* d2 = std::get_if<Disk>(&rhs);
  if (d1 && d2) return norm(d1->center - d2->center) >= d1->radius + d2->radius;
  if (d1 || d2) {
    const Disk& d = d1 ? *d1 : *d2;
    const auto& poly = std::get<ConvexPolygon>(d1 ? rhs : lhs);
    return point_polygon_distance(d.center, poly.vertices) >= d.radius;
  }
  // Separating axis test over the edge normals of both polygons.
  const auto& a = std::get<ConvexPolygon>(lhs).vertices;
  const auto& b = std::get<ConvexPolygon>(rhs).vertices;
  for (const auto* poly : {&a, &b}) {
    for (std::size_t i = 0; i < poly->size(); ++i) {
      const Vec2 edge = (*poly)[(i + 1) % poly->size()] - (*poly)[i];
      const Vec2 axis{edge.y, -edge.x};
      double max_a = -std::numeric_limits<double>::infinity();
      double min_a = std::numeric_limits<double>::infinity();
      double max_b = max_a, min_b = min_a;
      for (const Vec2& x : a) { max_a = std::max(max_a, dot(x, axis)); min_a = std::min(min_a, dot(x, axis)); }
      for (const Vec2& x : b) { max_b = std::max(max_b, dot(x, axis)); min_b = std::min(min_b, dot(x, axis)); }
      if (max_a <= min_b || max_b <= min_a) return true;
    }
  }
  return false;
}

}  // namespace detail

/// A disk, a convex polygon, or a finite union of pairwise disjoint ones.
/// The empty union stands for "no inclusion".
class Shape {
 public:
  Shape() = default;

  static Shape disk(Vec2 center, double radius) {
    require(radius > 0.0 && std::isfinite(radius), ErrorCode::InvalidArgument, "disk radius must be positive");
    Shape s;
    s.parts_.emplace_back(Disk{center, radius});
    return s;
  }

  static Shape polygon(std::vector<Vec2> vertices) {
    require(vertices.size() >= 3, ErrorCode::InvalidArgument, "polygon needs at least three vertices");
    double turning = 0.0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 e0 = vertices[(i + 1) % n] - vertices[i];
      const Vec2 e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
      require(cross(e0, e1) > 0.0, ErrorCode::InvalidArgument,
              "polygon vertices must be strictly convex and counterclockwise");
      turning += std::atan2(cross(e0, e1), dot(e0, e1));
    }
    require(std::abs(turning - 2.0 * kPi) < 1e-6, ErrorCode::InvalidArgument, "polygon is not simple");
    Shape s;
    s.parts_.emplace_back(ConvexPolygon{std::move(vertices)});
    return s;
  }

  static Shape union_of(const std::vector<Shape>& members) {
    Shape s;
    for (const Shape& m : members) {
      for (const ShapePart& part : m.parts_) {
        for (const ShapePart& existing : s.parts_) {
          require(detail::separated(existing, part), ErrorCode::InvalidArgument,
                  "union members must be pairwise disjoint");
        }
        s.parts_.push_back(part);
      }
    }
    return s;
  }

  bool empty() const { return parts_.empty(); }
  const std::vector<ShapePart>& parts() const { return parts_; }

  Box bounding_box() const {
    Box b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const ShapePart& part : parts_) {
      if (const auto* d = std::get_if<Disk>(&part)) {
        b.x_min = std::min(b.x_min, d->center.x - d->radius);
        b.x_max = std::max(b.x_max, d->center.x + d->radius);
        b.y_min = std::min(b.y_min, d->center.y - d->radius);
        b.y_max = std::max(b.y_max, d->center.y + d->radius);
      } else {
        for (const Vec2& v : std::get<ConvexPolygon>(part).vertices) {
          b.x_min = std::min(b.x_min, v.x);
          b.x_max = std::max(b.x_max, v.x);
          b.y_min = std::min(b.y_min, v.y);
          b.y_max = std::max(b.y_max, v.y);
        }
      }
    }
    return b;
  }

 private:
  std::vector<ShapePart> parts_;
};

/// h(rho) = sup over the shape of x.rho; -inf for the empty shape.
inline double support_function(const Shape& shape, Vec2 rho) {
  double best = -std::numeric_limits<double>::infinity();
  for (const ShapePart& part : shape.parts()) best = std::max(best, detail::support(part, rho));
  return best;
}

/// Membership in the open shape.
inline bool contains(const Shape& shape, Vec2 x) {
  return std::any_of(shape.parts().begin(), shape.parts().end(),
                     [&](const ShapePart& part) { return detail::contains(part, x); });
}

/// Midpoint rule for the integral over D of exp(-p tau (h_D(rho) - x.rho)),
/// on a grid of square-ish cells covering the bounding box of D.
inline double penetration_integral(const Shape& inclusion, Vec2 rho, double tau, double p, double cell) {
  require(tau > 0.0, ErrorCode::InvalidArgument, "tau must be positive");
  require(cell > 0.0, ErrorCode::InvalidArgument, "cell size must be positive");
  require(p * tau * cell <= 0.2 + 1e-12, ErrorCode::Resolution,
          "p * tau * cell = " + std::to_string(p * tau * cell) + " does not resolve the e-folding width");
  if (inclusion.empty()) return 0.0;
  const double h = support_function(inclusion, rho);
  const Box box = inclusion.bounding_box();
  const auto nx = static_cast<std::size_t>(std::ceil((box.x_max - box.x_min) / cell - 1e-9));
  const auto ny = static_cast<std::size_t>(std::ceil((box.y_max - box.y_min) / cell - 1e-9));
  const double dx = (box.x_max - box.x_min) / static_cast<double>(nx);
  const double dy = (box.y_max - box.y_min) / static_cast<double>(ny);
  double sum = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    const double y = box.y_min + (static_cast<double>(j) + 0.5) * dy;
    double row = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      const Vec2 x{box.x_min + (static_cast<double>(i) + 0.5) * dx, y};
      if (contains(inclusion, x)) row += std::exp(-p * tau * (h - dot(x, rho)));
    }
    sum += row;
  }
  return sum * dx * dy;
}

struct SupportEstimate {
  Vec2 rho;
  double h_hat = 0.0;
  double slope_fit_residual = 0.0;
};

struct HullResult {
  std::vector<Vec2> vertices;  // counterclockwise
  std::vector<Vec2> directions_used;
};

inline constexpr double kParallelGap = 1e-9;

/// Vertices of the intersection of the half-planes {x : x.rho <= h_hat(rho)}.
///
/// Directions are sorted by angle, near-parallel pairs merged (keeping the
/// tighter bound), and the polygon is swept with a deque of supporting lines:
/// lines whose consecutive intersection violates a later half-plane are
/// discarded.
inline HullResult halfspace_intersection(const std::vector<SupportEstimate>& estimates) {
  require(estimates.size() >= 3, ErrorCode::InsufficientData, "need at least three support estimates");
  struct Plane {
    Vec2 rho;
    double h;
    double angle;
  };
  std::vector<Plane> planes;
  planes.reserve(estimates.size());
  double scale = 1.0;
  for (const auto& e : estimates) {
    const double len = norm(e.rho);
    require(len > 0.0 && std::isfinite(e.h_hat), ErrorCode::InvalidArgument, "invalid support estimate");
    const Vec2 r = (1.0 / len) * e.rho;
    planes.push_back({r, e.h_hat, std::atan2(r.y, r.x)});
    scale = std::max(scale, std::abs(e.h_hat));
  }
  std::sort(planes.begin(), planes.end(), [](const Plane& a, const Plane& b) { return a.angle < b.angle; });

  std::vector<Plane> merged;
  for (const Plane& pl : planes) {
    if (!merged.empty() && pl.angle - merged.back().angle < kParallelGap) {
      if (pl.h < merged.back().h) merged.back() = pl;
      continue;
    }
    merged.push_back(pl);
  }
  if (merged.size() > 1 && merged.front().angle + 2.0 * kPi - merged.back().angle < kParallelGap) {
    if (merged.back().h < merged.front().h) merged.front() = merged.back();
    merged.pop_back();
  }

  double widest_gap = 0.0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const double next = i + 1 < merged.size() ? merged[i + 1].angle : merged.front().angle + 2.0 * kPi;
    widest_gap = std::max(widest_gap, next - merged[i].angle);
  }
  if (merged.size() < 3 || widest_gap >= kPi - kParallelGap) {
    throw Error(ErrorCode::Unbounded, "directions do not positively span the plane");
  }

  const double eps = 1e-12 * scale;
  auto intersect = [](const Plane& a, const Plane& b) {
    const double det = cross(a.rho, b.rho);
    if (std::abs(det) < 1e-14) throw Error(ErrorCode::EmptyIntersection, "consecutive supporting lines are parallel");
    return Vec2{(a.h * b.rho.y - b.h * a.rho.y) / det, (a.rho.x * b.h - b.rho.x * a.h) / det};
  };
  auto outside = [eps](const Plane& pl, Vec2 x) { return dot(x, pl.rho) > pl.h + eps; };

  std::deque<Plane> dq;
  for (const Plane& pl : merged) {
    while (dq.size() >= 2 && outside(pl, intersect(dq[dq.size() - 2], dq.back()))) dq.pop_back();
    while (dq.size() >= 2 && outside(pl, intersect(dq[0], dq[1]))) dq.pop_front();
    if (!dq.empty() && cross(dq.back().rho, pl.rho) <= 0.0) {
      // Turning by pi or more between kept lines: either the region is empty
      // or the remaining lines cannot close it.
      throw Error(ErrorCode::EmptyIntersection, "support estimates are inconsistent");
    }
    dq.push_back(pl);
  }
  while (dq.size() >= 3 && outside(dq[0], intersect(dq[dq.size() - 2], dq.back()))) dq.pop_back();
  while (dq.size() >= 3 && outside(dq.back(), intersect(dq[0], dq[1]))) dq.pop_front();
  require(dq.size() >= 3, ErrorCode::EmptyIntersection, "support estimates are inconsistent");

  HullResult out;
  for (std::size_t i = 0; i < dq.size(); ++i) {
    const Vec2 v = intersect(dq[i], dq[(i + 1) % dq.size()]);
    if (!out.vertices.empty() && norm(v - out.vertices.back()) <= 1e-12 * scale) continue;
    out.vertices.push_back(v);
  }
  if (out.vertices.size() > 1 && norm(out.vertices.front() - out.vertices.back()) <= 1e-12 * scale) {
    out.vertices.pop_back();
  }
  for (const Vec2& v : out.vertices) {
    for (const Plane& pl : merged) {
      require(dot(v, pl.rho) <= pl.h + 1e-9 * scale, ErrorCode::EmptyIntersection,
              "support estimates are inconsistent");
    }
  }
  require(out.vertices.size() >= 3, ErrorCode::EmptyIntersection, "intersection is degenerate");
  for (const Plane& pl : merged) out.directions_used.push_back(pl.rho);
  return out;
}

/// Symmetric Hausdorff distance between two convex polygon regions. The
/// distance to a convex set is convex, so the suprema sit at vertices.
inline double hausdorff_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  require(!a.empty() && !b.empty(), ErrorCode::InvalidArgument, "polygons must be nonempty");
  double worst = 0.0;
  for (const Vec2& v : a) worst = std::max(worst, detail::point_polygon_distance(v, b));
  for (const Vec2& v : b) worst = std::max(worst, detail::point_polygon_distance(v, a));
  return worst;
}

inline double polygon_support(const std::vector<Vec2>& polygon, Vec2 rho) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec2& v : polygon) best = std::max(best, dot(v, rho));
  return best;
}

/// Hausdorff distance between a convex polygon and the convex hull of a
/// shape, as the sup-norm of the support-function difference over a dense
/// set of directions.
inline double hausdorff_to_hull(const std::vector<Vec2>& polygon, const Shape& shape, int directions = 8192) {
  require(!polygon.empty() && !shape.empty(), ErrorCode::InvalidArgument, "both sets must be nonempty");
  double worst = 0.0;
  for (int k = 0; k < directions; ++k) {
    const Vec2 rho = unit_from_angle(2.0 * kPi * k / directions);
    worst = std::max(worst, std::abs(polygon_support(polygon, rho) - support_function(shape, rho)));
  }
  return worst;
}

inline double polygon_area(const std::vector<Vec2>& v) {
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) twice += cross(v[i], v[(i + 1) % v.size()]);
  return 0.5 * twice;
}

}  // namespace penclose
