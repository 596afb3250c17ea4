#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace eepc::geometry {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Andrew's monotone chain. Returns indices of the strictly convex vertices in
/// counter-clockwise order starting at the lowest-leftmost point. Exact
/// duplicates keep the smallest index; turns within `collinear_tol` (relative to
/// the edge lengths) are treated as straight and dropped.
inline std::vector<std::size_t> convex_hull(const std::vector<Point2>& pts, double collinear_tol = 1e-12) {
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].x != pts[b].x) return pts[a].x < pts[b].x;
    return pts[a].y < pts[b].y;
  });
  order.erase(std::unique(order.begin(), order.end(),
                          [&](std::size_t a, std::size_t b) { return pts[a].x == pts[b].x && pts[a].y == pts[b].y; }),
              order.end());
  if (order.size() <= 2) return order;

  auto left_turn = [&](std::size_t o, std::size_t a, std::size_t b) {
    const double c = cross(pts[o], pts[a], pts[b]);
    const double scale = std::hypot(pts[a].x - pts[o].x, pts[a].y - pts[o].y) *
                         std::hypot(pts[b].x - pts[o].x, pts[b].y - pts[o].y);
    return c > collinear_tol * scale;
  };

  std::vector<std::size_t> hull(2 * order.size());
  std::size_t k = 0;
  for (std::size_t idx : order) {
    while (k >= 2 && !left_turn(hull[k - 2], hull[k - 1], idx)) --k;
    hull[k++] = idx;
  }
  for (std::size_t j = order.size() - 1, lower = k + 1; j-- > 0;) {
    const std::size_t idx = order[j];
    while (k >= lower && !left_turn(hull[k - 2], hull[k - 1], idx)) --k;
    hull[k++] = idx;
  }
  hull.resize(k - 1);
  return hull;
}

/// Upper-right chain of a CCW hull: from the rightmost vertex (ties: highest)
/// to the topmost vertex (ties: rightmost). These vertices are the Pareto
/// frontier of the polygon.
inline std::vector<std::size_t> pareto_chain(const std::vector<Point2>& pts, const std::vector<std::size_t>& hull) {
  if (hull.empty()) return {};
  if (hull.size() == 1) return hull;
  auto better_right = [&](std::size_t a, std::size_t b) {
    return pts[a].x != pts[b].x ? pts[a].x > pts[b].x : pts[a].y > pts[b].y;
  };
  auto better_top = [&](std::size_t a, std::size_t b) {
    return pts[a].y != pts[b].y ? pts[a].y > pts[b].y : pts[a].x > pts[b].x;
  };
  std::size_t right = 0;
  std::size_t top = 0;
  for (std::size_t k = 1; k < hull.size(); ++k) {
    if (better_right(hull[k], hull[right])) right = k;
    if (better_top(hull[k], hull[top])) top = k;
  }
  std::vector<std::size_t> chain;
  for (std::size_t k = right;; k = (k + 1) % hull.size()) {
    chain.push_back(hull[k]);
    if (k == top) break;
  }
  return chain;
}

/// True when q lies inside or on the CCW polygon, allowing an absolute slack `tol`.
inline bool contains(const std::vector<Point2>& polygon, const Point2& q, double tol = 1e-9) {
  if (polygon.empty()) return false;
  if (polygon.size() == 1) return std::hypot(q.x - polygon[0].x, q.y - polygon[0].y) <= tol;
  for (std::size_t k = 0; k < polygon.size(); ++k) {
    const Point2& a = polygon[k];
    const Point2& b = polygon[(k + 1) % polygon.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len == 0.0) continue;
    // Signed distance of q to the edge line, positive on the interior side.
    if (cross(a, b, q) / len < -tol) return false;
  }
  if (polygon.size() == 2) {
    // Degenerate segment: also require q to project inside it.
    const Point2& a = polygon[0];
    const Point2& b = polygon[1];
    const double t = ((q.x - a.x) * (b.x - a.x) + (q.y - a.y) * (b.y - a.y)) /
                     ((b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y));
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    return t >= -tol / len && t <= 1.0 + tol / len;
  }
  return true;
}

/// Weak Pareto dominance: a >= b componentwise and a != b.
template <typename Vec>
bool dominates(const Vec& a, const Vec& b) {
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return false;
    if (a[i] > b[i]) strict = true;
  }
  return strict;
}

/// Indices of the non-dominated vectors. Exact duplicates keep their first
/// occurrence. `get(k)` returns something indexable with size().
template <typename Get>
std::vector<std::size_t> nondominated(std::size_t count, Get get) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Descending lexicographic order: nothing later can dominate anything earlier.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& va = get(a);
    const auto& vb = get(b);
    for (std::size_t i = 0; i < va.size(); ++i) {
      if (va[i] != vb[i]) return va[i] > vb[i];
    }
    return false;
  });
  std::vector<std::size_t> front;
  for (std::size_t idx : order) {
    const auto& v = get(idx);
    bool keep = true;
    for (std::size_t f : front) {
      const auto& w = get(f);
      if (dominates(w, v) || std::equal(w.begin(), w.end(), v.begin())) {
        keep = false;
        break;
      }
    }
    if (keep) front.push_back(idx);
  }
  return front;
}

}  // namespace eepc::geometry
