#include "pedghmm/geometry.hpp"

#include <algorithm>
#include <limits>

namespace pedghmm {

double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

double distance_to_polyline(Vec2 p, std::span<const Vec2> line) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  if (line.size() == 1) return distance(p, line[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    best = std::min(best, distance_to_segment(p, line[i], line[i + 1]));
  }
  return best;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = poly[j];
    const Vec2 b = poly[i];
    if (distance_to_segment(p, a, b) == 0.0) return true;
    if ((b.y > p.y) != (a.y > p.y)) {
      const double x_cross = (a.x - b.x) * (p.y - b.y) / (a.y - b.y) + b.x;
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double polygon_area(std::span<const Vec2> poly) {
  double twice = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    twice += cross(poly[i], poly[(i + 1) % n]);
  }
  return std::abs(twice) / 2.0;
}

double polygon_perimeter(std::span<const Vec2> poly) {
  double total = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    total += distance(poly[i], poly[(i + 1) % n]);
  }
  return total;
}

double polygon_strip_width(std::span<const Vec2> poly) {
  const double area = polygon_area(poly);
  const double perimeter = polygon_perimeter(poly);
  // Sides w, l with w*l = A and 2(w+l) = P.
  const double disc = perimeter * perimeter - 16.0 * area;
  if (disc < 0.0) return std::sqrt(area);
  return (perimeter - std::sqrt(disc)) / 4.0;
}

}  // namespace pedghmm
