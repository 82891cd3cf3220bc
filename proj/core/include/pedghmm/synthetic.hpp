#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pedghmm/scene.hpp"
#include "pedghmm/trajectory.hpp"

namespace pedghmm::synthetic {

/// Portable deterministic sampler. The standard distributions are
/// implementation-defined, so uniform and normal draws are derived directly
/// from the engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct WalkConfig {
  /// Meters per timestep.
  double speed = 0.2;
  /// Relative speed jitter per trajectory.
  double speed_jitter = 0.1;
  /// Std-dev of the additive position noise (m).
  double noise_sigma = 0.625;
  /// Partial trajectories keep a prefix of this fraction range of the path.
  double partial_min = 0.5;
  double partial_max = 0.9;
};

/// Samples a polyline at constant speed with Gaussian noise, clamped to
/// `bounds`. Timesteps start at 0.
Trajectory walk(const std::string& id, TrajectoryClass cls, const Polyline& path, const Rect& bounds,
                const WalkConfig& config, Rng& rng);

/// Straight 40 x 10 m corridor: sidewalk y in [0, 4], road above it,
/// destinations at both sidewalk ends.
SceneDescription corridor_scene();

/// Noisy walks along the corridor sidewalk, alternating direction.
std::vector<Trajectory> corridor_trajectories(std::size_t count, bool partial, const WalkConfig& config,
                                              std::uint64_t seed, std::size_t first_id = 0);

/// 40 x 24 m street: road band y in [8, 16] between two sidewalks, a
/// crosswalk over x in [18, 22], POIs at (6, 22) and (34, 2), destinations
/// at (0, 4) and (40, 20).
SceneDescription street_scene();

/// Sidewalk walks that cross at the crosswalk (or stay on one sidewalk and
/// head for a POI).
std::vector<Trajectory> legal_trajectories(std::size_t count, bool partial, const WalkConfig& config,
                                           std::uint64_t seed, std::size_t first_id = 0);

/// Walks that cut diagonally across the road away from the crosswalk.
std::vector<Trajectory> illegal_trajectories(std::size_t count, const WalkConfig& config, std::uint64_t seed,
                                             std::size_t first_id = 0);

}  // namespace pedghmm::synthetic
