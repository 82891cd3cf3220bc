#include "pedghmm/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "pedghmm/error.hpp"
#include "pedghmm/text.hpp"

namespace pedghmm {

const char* to_string(TrajectoryClass c) { return c == TrajectoryClass::kLegal ? "legal" : "illegal"; }

std::vector<Vec2> Trajectory::positions() const {
  std::vector<Vec2> out;
  out.reserve(samples.size());
  for (const TrajectorySample& s : samples) out.push_back(s.position);
  return out;
}

void validate(const Trajectory& tr) {
  if (tr.id.empty()) throw InputError("trajectory with an empty id");
  if (tr.samples.size() < 2) throw InputError("trajectory " + tr.id + " has fewer than 2 samples");
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    const TrajectorySample& s = tr.samples[k];
    if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y)) {
      throw InputError("trajectory " + tr.id + ": non-finite position at t=" + std::to_string(s.t));
    }
    if (s.velocity && (!std::isfinite(s.velocity->x) || !std::isfinite(s.velocity->y))) {
      throw InputError("trajectory " + tr.id + ": non-finite velocity at t=" + std::to_string(s.t));
    }
    if (k > 0 && s.t <= tr.samples[k - 1].t) {
      throw InputError("trajectory " + tr.id + ": timestep " + std::to_string(s.t) + " does not increase");
    }
  }
}

bool id_less(const std::string& a, const std::string& b) {
  const auto ia = text::parse_int(a);
  const auto ib = text::parse_int(b);
  if (ia && ib) return *ia != *ib ? *ia < *ib : a < b;
  if (ia != ib) return ia.has_value();
  return a < b;
}

std::vector<Trajectory> parse_trajectories(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!text::trim(line).empty()) break;
  }
  for (std::string_view f : text::split_char(text::trim(line), ',')) header.emplace_back(text::trim(f));
  const std::vector<std::string> base{"id", "class", "t", "x", "y", "vx", "vy"};
  const bool has_partial = header.size() == 8 && header[7] == "partial";
  if (header.size() < 7 || !std::equal(base.begin(), base.end(), header.begin()) ||
      (header.size() > 7 && !has_partial)) {
    throw ParseError(source, lineno, "expected header id,class,t,x,y,vx,vy[,partial]");
  }

  std::map<std::string, Trajectory, decltype(&id_less)> by_id(&id_less);
  std::map<std::string, std::size_t, decltype(&id_less)> first_line(&id_less);
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = text::trim(line);
    if (row.empty()) continue;
    const auto f = text::split_char(row, ',');
    if (f.size() != header.size()) {
      throw ParseError(source, lineno, "expected " + std::to_string(header.size()) + " fields");
    }
    const std::string id(text::trim(f[0]));
    if (id.empty()) throw ParseError(source, lineno, "empty id");
    const std::string_view cls = text::trim(f[1]);
    TrajectoryClass c;
    if (cls == "legal") {
      c = TrajectoryClass::kLegal;
    } else if (cls == "illegal") {
      c = TrajectoryClass::kIllegal;
    } else {
      throw ParseError(source, lineno, "class must be legal or illegal");
    }
    const auto t = text::parse_int(text::trim(f[2]));
    const auto x = text::parse_double(text::trim(f[3]));
    const auto y = text::parse_double(text::trim(f[4]));
    if (!t || !x || !y) throw ParseError(source, lineno, "bad t, x or y");
    TrajectorySample s{*t, {*x, *y}, std::nullopt};
    const std::string_view vx = text::trim(f[5]);
    const std::string_view vy = text::trim(f[6]);
    if (!vx.empty() || !vy.empty()) {
      const auto px = text::parse_double(vx);
      const auto py = text::parse_double(vy);
      if (!px || !py) throw ParseError(source, lineno, "bad velocity");
      s.velocity = Vec2{*px, *py};
    }
    bool partial = false;
    if (has_partial) {
      const std::string_view p = text::trim(f[7]);
      if (p == "1" || p == "true") {
        partial = true;
      } else if (!(p.empty() || p == "0" || p == "false")) {
        throw ParseError(source, lineno, "partial must be 0 or 1");
      }
    }
    auto [it, fresh] = by_id.try_emplace(id);
    Trajectory& tr = it->second;
    if (fresh) {
      tr.id = id;
      tr.cls = c;
      tr.partial = partial;
      first_line[id] = lineno;
    } else {
      if (tr.cls != c) throw ParseError(source, lineno, "class changes within trajectory " + id);
      if (tr.partial != partial) throw ParseError(source, lineno, "partial flag changes within trajectory " + id);
      if (s.t <= tr.samples.back().t) {
        throw ParseError(source, lineno, "timestep " + std::to_string(s.t) + " does not increase in trajectory " + id);
      }
    }
    tr.samples.push_back(s);
  }

  std::vector<Trajectory> out;
  out.reserve(by_id.size());
  for (auto& [id, tr] : by_id) {
    try {
      validate(tr);
    } catch (const InputError& e) {
      throw ParseError(source, first_line[id], e.what());
    }
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return parse_trajectories(in, path.string());
}

void write_trajectories(std::span<const Trajectory> trajectories, std::ostream& out) {
  using text::format_double;
  out << "id,class,t,x,y,vx,vy,partial\n";
  for (const Trajectory& tr : trajectories) {
    for (const TrajectorySample& s : tr.samples) {
      out << tr.id << ',' << to_string(tr.cls) << ',' << s.t << ',' << format_double(s.position.x) << ','
          << format_double(s.position.y) << ',';
      if (s.velocity) out << format_double(s.velocity->x) << ',' << format_double(s.velocity->y);
      else out << ',';
      out << ',' << (tr.partial ? 1 : 0) << '\n';
    }
  }
}

void save_trajectories(std::span<const Trajectory> trajectories, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_trajectories(trajectories, out);
}

}  // namespace pedghmm
