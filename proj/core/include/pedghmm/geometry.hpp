#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace pedghmm {

/// A point or displacement on the ground plane, in meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
constexpr double squared_distance(Vec2 a, Vec2 b) { return dot(a - b, a - b); }

/// Axis-aligned rectangle, closed on all sides.
struct Rect {
  Vec2 min;
  Vec2 max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  bool contains(Vec2 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

using Polyline = std::vector<Vec2>;
using Polygon = std::vector<Vec2>;

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b);
double distance_to_polyline(Vec2 p, std::span<const Vec2> line);

/// Even-odd rule; points on the boundary count as inside.
bool point_in_polygon(Vec2 p, std::span<const Vec2> poly);

double polygon_area(std::span<const Vec2> poly);
double polygon_perimeter(std::span<const Vec2> poly);

/// Short side of the rectangle with the same area and perimeter as `poly`.
/// Falls back to sqrt(area) for shapes too compact to have one.
double polygon_strip_width(std::span<const Vec2> poly);

}  // namespace pedghmm
