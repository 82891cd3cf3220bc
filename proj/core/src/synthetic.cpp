#include "pedghmm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pedghmm/error.hpp"

namespace pedghmm::synthetic {

double Rng::uniform() {
  // 53 random bits.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

Vec2 clamp_to(const Rect& r, Vec2 p) {
  return {std::clamp(p.x, r.min.x, r.max.x), std::clamp(p.y, r.min.y, r.max.y)};
}

double path_length(const Polyline& path) {
  double len = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) len += distance(path[k - 1], path[k]);
  return len;
}

Vec2 point_at(const Polyline& path, double s) {
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double seg = distance(path[k - 1], path[k]);
    if (s <= seg && seg > 0.0) return path[k - 1] + (s / seg) * (path[k] - path[k - 1]);
    s -= seg;
  }
  return path.back();
}

Polyline truncate(const Polyline& path, double keep) {
  const double target = keep * path_length(path);
  Polyline out{path.front()};
  double s = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double seg = distance(path[k - 1], path[k]);
    if (s + seg >= target) {
      out.push_back(point_at(path, target));
      return out;
    }
    out.push_back(path[k]);
    s += seg;
  }
  return out;
}

Polyline reversed(Polyline p) {
  std::reverse(p.begin(), p.end());
  return p;
}

Polygon box(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}; }

}  // namespace

Trajectory walk(const std::string& id, TrajectoryClass cls, const Polyline& path, const Rect& bounds,
                const WalkConfig& config, Rng& rng) {
  if (path.size() < 2) throw InputError("walk needs a path with at least 2 points");
  if (!(config.speed > 0.0)) throw InputError("walk speed must be > 0");
  const double speed = config.speed * (1.0 + rng.uniform(-config.speed_jitter, config.speed_jitter));
  const double len = path_length(path);
  const auto steps = static_cast<std::int64_t>(std::floor(len / speed));
  Trajectory tr;
  tr.id = id;
  tr.cls = cls;
  for (std::int64_t t = 0; t <= std::max<std::int64_t>(steps, 1); ++t) {
    const Vec2 p = point_at(path, std::min(len, static_cast<double>(t) * speed));
    const Vec2 noisy{rng.normal(p.x, config.noise_sigma), rng.normal(p.y, config.noise_sigma)};
    const Vec2 ahead = point_at(path, std::min(len, static_cast<double>(t + 1) * speed));
    tr.samples.push_back({t, clamp_to(bounds, noisy), ahead - p});
  }
  return tr;
}

SceneDescription corridor_scene() {
  SceneDescription s;
  s.bounds = {{0.0, 0.0}, {40.0, 10.0}};
  s.road_edges = {{{0.0, 4.0}, {40.0, 4.0}}};
  s.road_polygons = {box(0.0, 4.0, 40.0, 10.0)};
  s.sidewalks = {box(0.0, 0.0, 40.0, 4.0)};
  s.destinations = {{0.0, 2.0}, {40.0, 2.0}};
  return s;
}

std::vector<Trajectory> corridor_trajectories(std::size_t count, bool partial, const WalkConfig& config,
                                              std::uint64_t seed, std::size_t first_id) {
  const SceneDescription scene = corridor_scene();
  Rng rng(seed);
  std::vector<Trajectory> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double y0 = rng.uniform(1.2, 2.8);
    const double y1 = rng.uniform(1.2, 2.8);
    Polyline path{{0.5, y0}, {39.5, y1}};
    if (k % 2 == 1) path = reversed(path);
    if (partial) path = truncate(path, rng.uniform(config.partial_min, config.partial_max));
    Trajectory tr = walk(std::to_string(first_id + k), TrajectoryClass::kLegal, path, scene.bounds, config, rng);
    tr.partial = partial;
    out.push_back(std::move(tr));
  }
  return out;
}

SceneDescription street_scene() {
  SceneDescription s;
  s.bounds = {{0.0, 0.0}, {40.0, 24.0}};
  s.road_edges = {{{0.0, 8.0}, {40.0, 8.0}}, {{0.0, 16.0}, {40.0, 16.0}}};
  s.road_polygons = {box(0.0, 8.0, 40.0, 16.0)};
  s.crosswalks = {box(18.0, 8.0, 22.0, 16.0)};
  s.sidewalks = {box(0.0, 0.0, 40.0, 8.0), box(0.0, 16.0, 40.0, 24.0)};
  s.pois = {{"kiosk", {6.0, 22.0}}, {"shop", {34.0, 2.0}}};
  s.destinations = {{0.0, 4.0}, {40.0, 20.0}};
  return s;
}

std::vector<Trajectory> legal_trajectories(std::size_t count, bool partial, const WalkConfig& config,
                                           std::uint64_t seed, std::size_t first_id) {
  const SceneDescription scene = street_scene();
  Rng rng(seed);
  std::vector<Trajectory> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double yb = rng.uniform(3.0, 5.0);    // lower sidewalk lane
    const double yt = rng.uniform(19.0, 21.0);  // upper sidewalk lane
    const double xc = rng.uniform(19.0, 21.0);  // crossing line
    Polyline path;
    switch (k % 4) {
      case 0:  // lower-left destination across to the upper-right one
        path = {{0.5, yb}, {xc, yb}, {xc, yt}, {39.5, yt}};
        break;
      case 1:
        path = reversed({{0.5, yb}, {xc, yb}, {xc, yt}, {39.5, yt}});
        break;
      case 2:  // lower sidewalk to the shop
        path = {{0.5, yb}, {34.0, rng.uniform(2.0, 4.0)}};
        break;
      default:  // upper sidewalk to the kiosk
        path = {{39.5, yt}, {6.0, rng.uniform(20.0, 22.0)}};
        break;
    }
    if (partial) path = truncate(path, rng.uniform(config.partial_min, config.partial_max));
    Trajectory tr = walk(std::to_string(first_id + k), TrajectoryClass::kLegal, path, scene.bounds, config, rng);
    tr.partial = partial;
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<Trajectory> illegal_trajectories(std::size_t count, const WalkConfig& config, std::uint64_t seed,
                                             std::size_t first_id) {
  const SceneDescription scene = street_scene();
  Rng rng(seed);
  std::vector<Trajectory> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double yb = rng.uniform(3.0, 5.0);
    const double yt = rng.uniform(19.0, 21.0);
    // Leave the sidewalk well away from the crosswalk and cut across.
    const double x0 = rng.uniform(5.0, 9.0);
    const double x1 = rng.uniform(31.0, 35.0);
    Polyline path{{0.5, yb}, {x0, yb}, {x1, yt}, {39.5, yt}};
    if (k % 2 == 1) path = reversed(path);
    Trajectory tr = walk(std::to_string(first_id + k), TrajectoryClass::kIllegal, path, scene.bounds, config, rng);
    out.push_back(std::move(tr));
  }
  return out;
}

}  // namespace pedghmm::synthetic

