#include "pedghmm/cost_map.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "pedghmm/error.hpp"
#include "pedghmm/text.hpp"

namespace pedghmm {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

constexpr std::array<char, 4> kMagic = {'P', 'C', 'M', '1'};
constexpr std::size_t kMaxCells = 65535;

double truncated_exp(double gain, double d, double sigma, double truncation) {
  if (d > truncation * sigma) return 0.0;
  return gain * std::exp(-d / sigma);
}

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& source) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw InputError(source + ": truncated cost map");
  return v;
}

}  // namespace

PotentialComponents potential_components(const SceneDescription& scene, Vec2 p, Timestep time) {
  const PotentialParams& k = scene.params;
  PotentialComponents c;
  for (const auto& edge : scene.road_edges) {
    c.edge += truncated_exp(k.edge_gain, distance_to_polyline(p, edge), k.edge_sigma, k.truncation);
  }
  for (const auto& road : scene.road_polygons) {
    if (point_in_polygon(p, road)) c.road += k.road_gain * polygon_strip_width(road);
  }
  for (const auto& o : scene.obstacles) {
    if (!o.active_at(time)) continue;
    const double d = std::max(0.0, distance(p, o.center) - o.radius);
    c.obstacle += truncated_exp(k.obstacle_gain, d, k.obstacle_sigma, k.truncation);
  }
  double well = 0.0;
  for (const auto& poi : scene.pois) {
    well -= truncated_exp(k.poi_gain, distance(p, poi.position), k.poi_sigma, k.truncation);
  }
  c.poi = std::max(well, -(c.edge + c.road + c.obstacle));
  return c;
}

double raw_potential(const SceneDescription& scene, Vec2 p, Timestep time) {
  return potential_components(scene, p, time).total();
}

bool is_zero_resistance(const SceneDescription& scene, Vec2 p) {
  for (const auto& poly : scene.crosswalks) {
    if (point_in_polygon(p, poly)) return true;
  }
  for (const auto& poly : scene.sidewalks) {
    if (point_in_polygon(p, poly)) return true;
  }
  return false;
}

PotentialCostMap compute_potential_map(const SceneDescription& scene, double resolution, Timestep time) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw InputError("resolution must be > 0");
  const Rect& b = scene.bounds;
  if (!(b.width() > 0.0) || !(b.height() > 0.0)) throw InvariantError("scene bounds have zero area");

  PotentialCostMap map;
  map.origin = b.min;
  map.resolution = resolution;
  map.width = static_cast<std::size_t>(std::max(1.0, std::ceil(b.width() / resolution - 1e-9)));
  map.height = static_cast<std::size_t>(std::max(1.0, std::ceil(b.height() / resolution - 1e-9)));
  if (map.width > kMaxCells || map.height > kMaxCells) {
    throw InputError("cost map would exceed 65535 cells per axis; increase the resolution");
  }
  map.values.resize(map.width * map.height);

  double max_raw = 0.0;
  for (std::size_t j = 0; j < map.height; ++j) {
    for (std::size_t i = 0; i < map.width; ++i) {
      const Vec2 c = map.cell_center(i, j);
      const double raw = is_zero_resistance(scene, c) ? 0.0 : raw_potential(scene, c, time);
      map.values[j * map.width + i] = raw;
      max_raw = std::max(max_raw, raw);
    }
  }
  const double floor = scene.params.floor;
  for (double& v : map.values) {
    v = max_raw > 0.0 ? floor + (1.0 - floor) * (v / max_raw) : floor;
    v = std::clamp(v, floor, 1.0);
  }
  return map;
}

double sample_cost(const PotentialCostMap& map, Vec2 point) {
  if (!map.contains(point)) {
    throw OutOfBoundsError("point (" + text::format_double(point.x) + ", " + text::format_double(point.y) +
                           ") lies outside the cost map");
  }
  const double fx = std::clamp((point.x - map.origin.x) / map.resolution - 0.5, 0.0,
                               static_cast<double>(map.width - 1));
  const double fy = std::clamp((point.y - map.origin.y) / map.resolution - 0.5, 0.0,
                               static_cast<double>(map.height - 1));
  const auto i0 = static_cast<std::size_t>(std::floor(fx));
  const auto j0 = static_cast<std::size_t>(std::floor(fy));
  const std::size_t i1 = std::min(i0 + 1, map.width - 1);
  const std::size_t j1 = std::min(j0 + 1, map.height - 1);
  const double tx = fx - static_cast<double>(i0);
  const double ty = fy - static_cast<double>(j0);
  const double bottom = (1.0 - tx) * map.at(i0, j0) + tx * map.at(i1, j0);
  const double top = (1.0 - tx) * map.at(i0, j1) + tx * map.at(i1, j1);
  const double v = (1.0 - ty) * bottom + ty * top;
  return std::clamp(v, std::numeric_limits<double>::min(), 1.0);
}

void write_cost_map_binary(const PotentialCostMap& map, const std::filesystem::path& path) {
  if (map.width > kMaxCells || map.height > kMaxCells) throw InputError("cost map too large for binary export");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write cost map " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put(out, static_cast<std::uint16_t>(map.width));
  put(out, static_cast<std::uint16_t>(map.height));
  put(out, map.resolution);
  for (double v : map.values) put(out, v);
  if (!out) throw InputError("failed writing cost map " + path.string());
}

PotentialCostMap read_cost_map_binary(const std::filesystem::path& path, Vec2 origin) {
  std::ifstream in(path, std::ios::binary);
  const std::string source = path.string();
  if (!in) throw InputError("cannot open cost map " + source);
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw InputError(source + ": not a cost map file");
  PotentialCostMap map;
  map.origin = origin;
  map.width = get<std::uint16_t>(in, source);
  map.height = get<std::uint16_t>(in, source);
  map.resolution = get<double>(in, source);
  if (map.width == 0 || map.height == 0 || !(map.resolution > 0.0)) throw InputError(source + ": invalid cost map header");
  map.values.resize(map.width * map.height);
  for (double& v : map.values) {
    v = get<double>(in, source);
    if (!(v > 0.0 && v <= 1.0)) throw InvariantError(source + ": cost value outside (0, 1]");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw InputError(source + ": trailing bytes after cost map");
  return map;
}

void write_cost_map_csv(const PotentialCostMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "i,j,x,y,cost\n";
  for (std::size_t j = 0; j < map.height; ++j) {
    for (std::size_t i = 0; i < map.width; ++i) {
      const Vec2 c = map.cell_center(i, j);
      out << i << ',' << j << ',' << text::format_double(c.x) << ',' << text::format_double(c.y) << ','
          << text::format_double(map.at(i, j)) << '\n';
    }
  }
}

}  // namespace pedghmm
