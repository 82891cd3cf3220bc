#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pedghmm/geometry.hpp"

namespace pedghmm {

enum class TrajectoryClass : std::uint8_t { kLegal, kIllegal };

const char* to_string(TrajectoryClass c);

struct TrajectorySample {
  std::int64_t t = 0;
  Vec2 position;
  std::optional<Vec2> velocity;
  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct Trajectory {
  std::string id;
  TrajectoryClass cls = TrajectoryClass::kLegal;
  std::vector<TrajectorySample> samples;
  /// Tracking was lost before the pedestrian reached its goal.
  bool partial = false;

  std::vector<Vec2> positions() const;
  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Strictly increasing timesteps, at least 2 samples, finite values.
/// Throws InputError naming the trajectory.
void validate(const Trajectory& trajectory);

/// Ids compare numerically when both are integers, otherwise as strings.
bool id_less(const std::string& a, const std::string& b);

/// CSV with header `id,class,t,x,y,vx,vy[,partial]`; vx/vy may be empty.
/// Rows of one id may be interleaved with others but must carry increasing t.
/// Result is ordered by id.
std::vector<Trajectory> parse_trajectories(std::istream& in, const std::string& source = "<trajectories>");
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);

void write_trajectories(std::span<const Trajectory> trajectories, std::ostream& out);
void save_trajectories(std::span<const Trajectory> trajectories, const std::filesystem::path& path);

}  // namespace pedghmm
