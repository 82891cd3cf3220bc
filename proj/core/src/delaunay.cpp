#include "pedghmm/delaunay.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>

#include "pedghmm/error.hpp"

namespace pedghmm {
namespace {

using i64 = std::int64_t;
__extension__ typedef __int128 i128;

struct IPoint {
  i64 x;
  i64 y;
  friend bool operator==(IPoint, IPoint) = default;
};

// Sign of twice the signed area of (a, b, c); > 0 when counter-clockwise.
int orient(IPoint a, IPoint b, IPoint c) {
  const i128 v = static_cast<i128>(b.x - a.x) * (c.y - a.y) - static_cast<i128>(b.y - a.y) * (c.x - a.x);
  return (v > 0) - (v < 0);
}

// > 0 when d is strictly inside the circumcircle of counter-clockwise (a, b, c).
int incircle(IPoint a, IPoint b, IPoint c, IPoint d) {
  const i128 adx = a.x - d.x, ady = a.y - d.y;
  const i128 bdx = b.x - d.x, bdy = b.y - d.y;
  const i128 cdx = c.x - d.x, cdy = c.y - d.y;
  const i128 alift = adx * adx + ady * ady;
  const i128 blift = bdx * bdx + bdy * bdy;
  const i128 clift = cdx * cdx + cdy * cdy;
  const i128 v = alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) + clift * (adx * bdy - ady * bdx);
  return (v > 0) - (v < 0);
}

// Strictly between a and b, given collinear.
bool strictly_between(IPoint a, IPoint b, IPoint p) {
  const i128 d = static_cast<i128>(p.x - a.x) * (b.x - a.x) + static_cast<i128>(p.y - a.y) * (b.y - a.y);
  const i128 len2 = static_cast<i128>(b.x - a.x) * (b.x - a.x) + static_cast<i128>(b.y - a.y) * (b.y - a.y);
  return d > 0 && d < len2;
}

constexpr int kGhost = -1;

struct Triangle {
  std::array<int, 3> v;
};

class Triangulator {
 public:
  explicit Triangulator(const std::vector<IPoint>& pts) : pts_(pts) {}

  void seed(int a, int b, int c) {
    if (orient(pts_[a], pts_[b], pts_[c]) < 0) std::swap(b, c);
    tris_.push_back({{a, b, c}});
    tris_.push_back({{b, a, kGhost}});
    tris_.push_back({{c, b, kGhost}});
    tris_.push_back({{a, c, kGhost}});
  }

  void insert(int p) {
    std::vector<Triangle> keep;
    std::vector<Triangle> cavity;
    keep.reserve(tris_.size() + 4);
    for (const Triangle& t : tris_) {
      (conflicts(t, p) ? cavity : keep).push_back(t);
    }
    std::set<std::pair<int, int>> directed;
    for (const Triangle& t : cavity) {
      for (int k = 0; k < 3; ++k) directed.insert({t.v[k], t.v[(k + 1) % 3]});
    }
    // Boundary edges in deterministic cavity order.
    for (const Triangle& t : cavity) {
      for (int k = 0; k < 3; ++k) {
        const int a = t.v[k];
        const int b = t.v[(k + 1) % 3];
        if (directed.contains({b, a})) continue;
        keep.push_back({{a, b, p}});
      }
    }
    tris_ = std::move(keep);
  }

  std::vector<IndexEdge> edges() const {
    std::set<IndexEdge> out;
    for (const Triangle& t : tris_) {
      if (t.v[0] == kGhost || t.v[1] == kGhost || t.v[2] == kGhost) continue;
      for (int k = 0; k < 3; ++k) {
        std::size_t a = static_cast<std::size_t>(t.v[k]);
        std::size_t b = static_cast<std::size_t>(t.v[(k + 1) % 3]);
        if (a > b) std::swap(a, b);
        out.insert({a, b});
      }
    }
    return {out.begin(), out.end()};
  }

 private:
  bool conflicts(const Triangle& t, int p) const {
    const IPoint q = pts_[p];
    for (int k = 0; k < 3; ++k) {
      if (t.v[k] != kGhost) continue;
      // Rotate so the ghost vertex is last: (u, v, ghost), exterior on the left of u->v.
      const IPoint u = pts_[t.v[(k + 1) % 3]];
      const IPoint v = pts_[t.v[(k + 2) % 3]];
      const int o = orient(u, v, q);
      return o > 0 || (o == 0 && strictly_between(u, v, q));
    }
    return incircle(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], q) > 0;
  }

  const std::vector<IPoint>& pts_;
  std::vector<Triangle> tris_;
};

}  // namespace

std::vector<IndexEdge> delaunay_edges(std::span<const Vec2> points) {
  if (points.size() < 2) throw InputError("delaunay_edges needs at least 2 points");
  double minx = std::numeric_limits<double>::infinity(), miny = minx;
  double maxx = -minx, maxy = -minx;
  for (const Vec2& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InputError("delaunay_edges: non-finite point");
    minx = std::min(minx, p.x);
    miny = std::min(miny, p.y);
    maxx = std::max(maxx, p.x);
    maxy = std::max(maxy, p.y);
  }
  const double span = std::max(maxx - minx, maxy - miny);
  const double quantum = std::max(1e-4, span / static_cast<double>(i64{1} << 26));

  std::vector<IPoint> snapped(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    snapped[i] = {std::llround((points[i].x - minx) / quantum), std::llround((points[i].y - miny) / quantum)};
  }
  // First occurrence of each snapped location, in index order.
  std::vector<int> order;
  {
    std::set<std::pair<i64, i64>> seen;
    for (std::size_t i = 0; i < snapped.size(); ++i) {
      if (seen.insert({snapped[i].x, snapped[i].y}).second) order.push_back(static_cast<int>(i));
    }
  }
  if (order.size() < 2) throw InputError("delaunay_edges needs at least 2 distinct points");

  const IPoint a = snapped[order[0]];
  const IPoint b = snapped[order[1]];
  std::size_t third = 0;
  for (std::size_t k = 2; k < order.size(); ++k) {
    if (orient(a, b, snapped[order[k]]) != 0) {
      third = k;
      break;
    }
  }
  if (third == 0) {
    std::vector<int> line = order;
    std::sort(line.begin(), line.end(), [&](int l, int r) {
      const i128 dl = static_cast<i128>(snapped[l].x - a.x) * (b.x - a.x) + static_cast<i128>(snapped[l].y - a.y) * (b.y - a.y);
      const i128 dr = static_cast<i128>(snapped[r].x - a.x) * (b.x - a.x) + static_cast<i128>(snapped[r].y - a.y) * (b.y - a.y);
      return dl < dr;
    });
    std::vector<IndexEdge> out;
    for (std::size_t k = 0; k + 1 < line.size(); ++k) {
      const auto u = static_cast<std::size_t>(line[k]);
      const auto v = static_cast<std::size_t>(line[k + 1]);
      out.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  Triangulator tri(snapped);
  tri.seed(order[0], order[1], order[third]);
  for (std::size_t k = 2; k < order.size(); ++k) {
    if (k != third) tri.insert(order[k]);
  }
  return tri.edges();
}

}  // namespace pedghmm
