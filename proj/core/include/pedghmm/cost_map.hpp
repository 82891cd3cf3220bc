#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "pedghmm/geometry.hpp"
#include "pedghmm/scene.hpp"

namespace pedghmm {

/// Regular grid of potential costs in (0, 1]. Cell (i, j) covers
/// [origin + (i, j) * resolution, origin + (i + 1, j + 1) * resolution) and
/// its value is registered at the cell center. Values are row-major
/// (row j = y index).
struct PotentialCostMap {
  Vec2 origin;
  double resolution = 1.0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[j * width + i]; }
  Vec2 cell_center(std::size_t i, std::size_t j) const {
    return {origin.x + (static_cast<double>(i) + 0.5) * resolution,
            origin.y + (static_cast<double>(j) + 0.5) * resolution};
  }
  Rect extent() const {
    return {origin, {origin.x + static_cast<double>(width) * resolution,
                     origin.y + static_cast<double>(height) * resolution}};
  }
  bool contains(Vec2 p) const { return extent().contains(p); }

  friend bool operator==(const PotentialCostMap&, const PotentialCostMap&) = default;
};

/// The four terms of the total potential at one point, before rescaling.
struct PotentialComponents {
  double edge = 0.0;
  double road = 0.0;
  double obstacle = 0.0;
  /// Attractive (<= 0), already clipped so the total stays >= 0.
  double poi = 0.0;

  double total() const { return edge + road + obstacle + poi; }
};

PotentialComponents potential_components(const SceneDescription& scene, Vec2 p, Timestep time);

/// Unscaled total potential; crosswalks and sidewalks are not yet zeroed.
double raw_potential(const SceneDescription& scene, Vec2 p, Timestep time);

/// True where the scene offers no resistance (crosswalks, sidewalks).
bool is_zero_resistance(const SceneDescription& scene, Vec2 p);

/// Evaluates the total potential at every cell center with the obstacles
/// active at `time`, then maps [0, max] affinely onto [floor, 1].
/// Zero-resistance cells receive the floor cost.
PotentialCostMap compute_potential_map(const SceneDescription& scene, double resolution, Timestep time);

/// Bilinear interpolation between cell centers; constant within the outer
/// half cell. Throws OutOfBoundsError outside the map extent.
double sample_cost(const PotentialCostMap& map, Vec2 point);

/// Binary layout: "PCM1", u16 width, u16 height, f64 resolution (16-byte
/// little-endian header), then width*height f64 values row-major. The origin
/// is not stored; maps built from a scene use the scene bounds minimum.
void write_cost_map_binary(const PotentialCostMap& map, const std::filesystem::path& path);
PotentialCostMap read_cost_map_binary(const std::filesystem::path& path, Vec2 origin);

/// Debug export with header `i,j,x,y,cost`.
void write_cost_map_csv(const PotentialCostMap& map, const std::filesystem::path& path);

}  // namespace pedghmm
