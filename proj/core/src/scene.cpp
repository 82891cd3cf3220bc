#include "pedghmm/scene.hpp"

#include <fstream>
#include <sstream>

#include "pedghmm/error.hpp"
#include "pedghmm/text.hpp"

namespace pedghmm {
namespace {

constexpr std::string_view kHeader = "scene-format 1";

std::string describe(Vec2 p) {
  return "(" + text::format_double(p.x) + ", " + text::format_double(p.y) + ")";
}

void require_inside(const Rect& bounds, Vec2 p, const std::string& what) {
  if (!bounds.contains(p)) {
    throw InvariantError(what + " at " + describe(p) + " lies outside the scene bounds");
  }
}

void require_inside(const Rect& bounds, const std::vector<Vec2>& pts, const std::string& what) {
  for (const Vec2& p : pts) require_inside(bounds, p, what);
}

struct ParamField {
  std::string_view name;
  double PotentialParams::*member;
};

constexpr ParamField kParamFields[] = {
    {"edge_gain", &PotentialParams::edge_gain},
    {"edge_sigma", &PotentialParams::edge_sigma},
    {"road_gain", &PotentialParams::road_gain},
    {"obstacle_gain", &PotentialParams::obstacle_gain},
    {"obstacle_sigma", &PotentialParams::obstacle_sigma},
    {"poi_gain", &PotentialParams::poi_gain},
    {"poi_sigma", &PotentialParams::poi_sigma},
    {"truncation", &PotentialParams::truncation},
    {"floor", &PotentialParams::floor},
    {"merge_radius", &PotentialParams::merge_radius},
};

void validate_params(const PotentialParams& p) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvariantError(std::string("param ") + name + " must be > 0");
  };
  auto nonnegative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvariantError(std::string("param ") + name + " must be >= 0");
  };
  nonnegative(p.edge_gain, "edge_gain");
  positive(p.edge_sigma, "edge_sigma");
  nonnegative(p.road_gain, "road_gain");
  nonnegative(p.obstacle_gain, "obstacle_gain");
  positive(p.obstacle_sigma, "obstacle_sigma");
  nonnegative(p.poi_gain, "poi_gain");
  positive(p.poi_sigma, "poi_sigma");
  positive(p.truncation, "truncation");
  if (!(p.floor > 0.0 && p.floor < 1.0)) throw InvariantError("param floor must lie in (0, 1)");
  nonnegative(p.merge_radius, "merge_radius");
}

std::vector<Vec2> parse_points(const std::vector<std::string_view>& tok, std::size_t first,
                               const std::string& source, std::size_t line) {
  if ((tok.size() - first) % 2 != 0) throw ParseError(source, line, "odd number of coordinates");
  std::vector<Vec2> pts;
  for (std::size_t i = first; i < tok.size(); i += 2) {
    auto x = text::parse_double(tok[i]);
    auto y = text::parse_double(tok[i + 1]);
    if (!x || !y) throw ParseError(source, line, "bad coordinate '" + std::string(tok[i]) + " " + std::string(tok[i + 1]) + "'");
    pts.push_back({*x, *y});
  }
  return pts;
}

double parse_number(std::string_view tok, const std::string& field, const std::string& source, std::size_t line) {
  auto v = text::parse_double(tok);
  if (!v) throw ParseError(source, line, "bad value for " + field + ": '" + std::string(tok) + "'");
  return *v;
}

void write_points(std::ostream& out, std::string_view keyword, const std::vector<Vec2>& pts) {
  out << keyword;
  for (const Vec2& p : pts) out << ' ' << text::format_double(p.x) << ' ' << text::format_double(p.y);
  out << '\n';
}

}  // namespace

void validate(const SceneDescription& scene) {
  const Rect& b = scene.bounds;
  if (!(b.width() > 0.0) || !(b.height() > 0.0)) throw InvariantError("scene bounds have zero area");
  validate_params(scene.params);
  for (std::size_t i = 0; i < scene.road_edges.size(); ++i) {
    if (scene.road_edges[i].size() < 2) throw InvariantError("road_edge " + std::to_string(i) + " needs at least 2 points");
    require_inside(b, scene.road_edges[i], "road_edge " + std::to_string(i));
  }
  auto check_polys = [&](const std::vector<Polygon>& polys, const std::string& kind) {
    for (std::size_t i = 0; i < polys.size(); ++i) {
      if (polys[i].size() < 3) throw InvariantError(kind + " " + std::to_string(i) + " needs at least 3 points");
      require_inside(b, polys[i], kind + " " + std::to_string(i));
    }
  };
  check_polys(scene.road_polygons, "road");
  check_polys(scene.crosswalks, "crosswalk");
  check_polys(scene.sidewalks, "sidewalk");
  for (const auto& poi : scene.pois) {
    if (poi.label.empty()) throw InvariantError("poi with empty label");
    require_inside(b, poi.position, "poi '" + poi.label + "'");
  }
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    const Obstacle& o = scene.obstacles[i];
    const std::string name = "obstacle " + std::to_string(i);
    if (!(o.radius > 0.0)) throw InvariantError(name + " must have radius > 0");
    if (o.active_from > o.active_to) throw InvariantError(name + " has active interval start after end");
    require_inside(b, o.center, name);
  }
  if (scene.destinations.empty()) throw InvariantError("scene lists no destinations");
  for (std::size_t i = 0; i < scene.destinations.size(); ++i) {
    require_inside(b, scene.destinations[i], "destination " + std::to_string(i));
  }
}

SceneDescription parse_scene(std::istream& in, const std::string& source) {
  SceneDescription scene;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  bool have_bounds = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view view = text::trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (!have_header) {
      if (view != kHeader) throw ParseError(source, lineno, "expected header '" + std::string(kHeader) + "'");
      have_header = true;
      continue;
    }
    const auto tok = text::split_whitespace(view);
    const std::string_view key = tok[0];
    if (key == "bounds") {
      if (tok.size() != 5) throw ParseError(source, lineno, "bounds expects 4 numbers");
      const auto pts = parse_points(tok, 1, source, lineno);
      scene.bounds = {pts[0], pts[1]};
      have_bounds = true;
    } else if (key == "param") {
      if (tok.size() != 3) throw ParseError(source, lineno, "param expects a name and a value");
      bool found = false;
      for (const auto& field : kParamFields) {
        if (field.name == tok[1]) {
          scene.params.*field.member = parse_number(tok[2], std::string(tok[1]), source, lineno);
          found = true;
        }
      }
      if (!found) throw ParseError(source, lineno, "unknown param '" + std::string(tok[1]) + "'");
    } else if (key == "road_edge") {
      scene.road_edges.push_back(parse_points(tok, 1, source, lineno));
    } else if (key == "road") {
      scene.road_polygons.push_back(parse_points(tok, 1, source, lineno));
    } else if (key == "crosswalk") {
      scene.crosswalks.push_back(parse_points(tok, 1, source, lineno));
    } else if (key == "sidewalk") {
      scene.sidewalks.push_back(parse_points(tok, 1, source, lineno));
    } else if (key == "poi") {
      if (tok.size() != 4) throw ParseError(source, lineno, "poi expects a label and 2 coordinates");
      const auto pts = parse_points(tok, 2, source, lineno);
      scene.pois.push_back({std::string(tok[1]), pts[0]});
    } else if (key == "obstacle") {
      if (tok.size() != 6) throw ParseError(source, lineno, "obstacle expects cx cy radius t_start t_end");
      Obstacle o;
      o.center = {parse_number(tok[1], "obstacle x", source, lineno), parse_number(tok[2], "obstacle y", source, lineno)};
      o.radius = parse_number(tok[3], "obstacle radius", source, lineno);
      auto t0 = text::parse_int(tok[4]);
      auto t1 = text::parse_int(tok[5]);
      if (!t0 || !t1) throw ParseError(source, lineno, "obstacle interval must be integer timesteps");
      o.active_from = *t0;
      o.active_to = *t1;
      scene.obstacles.push_back(o);
    } else if (key == "destination") {
      if (tok.size() != 3) throw ParseError(source, lineno, "destination expects 2 coordinates");
      scene.destinations.push_back(parse_points(tok, 1, source, lineno)[0]);
    } else {
      throw ParseError(source, lineno, "unknown section '" + std::string(key) + "'");
    }
  }
  if (!have_header) throw ParseError(source, lineno, "missing header '" + std::string(kHeader) + "'");
  if (!have_bounds) throw ParseError(source, lineno, "missing bounds");
  validate(scene);
  return scene;
}

SceneDescription load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scene file " + path.string());
  return parse_scene(in, path.string());
}

void write_scene(const SceneDescription& scene, std::ostream& out) {
  out << kHeader << '\n';
  write_points(out, "bounds", {scene.bounds.min, scene.bounds.max});
  for (const auto& field : kParamFields) {
    out << "param " << field.name << ' ' << text::format_double(scene.params.*field.member) << '\n';
  }
  for (const auto& l : scene.road_edges) write_points(out, "road_edge", l);
  for (const auto& p : scene.road_polygons) write_points(out, "road", p);
  for (const auto& p : scene.crosswalks) write_points(out, "crosswalk", p);
  for (const auto& p : scene.sidewalks) write_points(out, "sidewalk", p);
  for (const auto& poi : scene.pois) {
    out << "poi " << poi.label << ' ' << text::format_double(poi.position.x) << ' '
        << text::format_double(poi.position.y) << '\n';
  }
  for (const auto& o : scene.obstacles) {
    out << "obstacle " << text::format_double(o.center.x) << ' ' << text::format_double(o.center.y) << ' '
        << text::format_double(o.radius) << ' ' << o.active_from << ' ' << o.active_to << '\n';
  }
  for (const Vec2& d : scene.destinations) write_points(out, "destination", {d});
}

void save_scene(const SceneDescription& scene, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write scene file " + path.string());
  write_scene(scene, out);
}

std::vector<Vec2> list_destinations(const SceneDescription& scene) {
  std::vector<Vec2> out;
  auto add = [&](Vec2 p) {
    for (const Vec2& q : out) {
      if (distance(p, q) <= scene.params.merge_radius) return;
    }
    out.push_back(p);
  };
  for (const Vec2& d : scene.destinations) add(d);
  for (const auto& poi : scene.pois) add(poi.position);
  return out;
}

}  // namespace pedghmm
