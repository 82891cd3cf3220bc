#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pedghmm/geometry.hpp"

namespace pedghmm {

using Timestep = std::int64_t;

struct PointOfInterest {
  std::string label;
  Vec2 position;
  friend bool operator==(const PointOfInterest&, const PointOfInterest&) = default;
};

/// A circular obstacle present during [active_from, active_to] (inclusive).
struct Obstacle {
  Vec2 center;
  double radius = 1.0;
  Timestep active_from = 0;
  Timestep active_to = 0;

  bool active_at(Timestep t) const { return t >= active_from && t <= active_to; }
  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

/// Gains and length scales of the component potentials. Edge and obstacle
/// fields are gain * exp(-d / sigma), cut to zero beyond truncation * sigma.
/// The road term is road_gain per meter of road width over the road area.
/// POIs are attractive wells of depth poi_gain.
struct PotentialParams {
  double edge_gain = 0.5;
  double edge_sigma = 1.0;
  double road_gain = 0.1;
  double obstacle_gain = 1.0;
  double obstacle_sigma = 1.0;
  double poi_gain = 0.3;
  double poi_sigma = 3.0;
  double truncation = 4.0;
  /// Cost assigned to zero-resistance cells; lower end of the rescaled range.
  double floor = 0.05;
  /// Destinations/POIs closer than this are reported once.
  double merge_radius = 1.0;

  friend bool operator==(const PotentialParams&, const PotentialParams&) = default;
};

struct SceneDescription {
  Rect bounds;
  std::vector<Polyline> road_edges;
  std::vector<Polygon> road_polygons;
  std::vector<Polygon> crosswalks;
  std::vector<Polygon> sidewalks;
  std::vector<PointOfInterest> pois;
  std::vector<Obstacle> obstacles;
  std::vector<Vec2> destinations;
  PotentialParams params;

  friend bool operator==(const SceneDescription&, const SceneDescription&) = default;
};

/// Throws InvariantError naming the first offending element.
void validate(const SceneDescription& scene);

/// Reads the `scene-format 1` text format. Throws ParseError / InvariantError.
SceneDescription load_scene(const std::filesystem::path& path);
SceneDescription parse_scene(std::istream& in, const std::string& source = "<scene>");

void save_scene(const SceneDescription& scene, const std::filesystem::path& path);
void write_scene(const SceneDescription& scene, std::ostream& out);

/// Destinations followed by POIs, dropping any point within
/// params.merge_radius of one already listed.
std::vector<Vec2> list_destinations(const SceneDescription& scene);

}  // namespace pedghmm
