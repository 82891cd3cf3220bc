#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pedghmm/ghmm.hpp"

namespace pedghmm {

struct Belief {
  std::vector<double> weights;
  std::int64_t timestep = 0;
  friend bool operator==(const Belief&, const Belief&) = default;
};

struct PredictionResult {
  std::int64_t horizon = 0;
  Belief state_belief;
  Vec2 expected_position;
  GoalId map_goal = 0;
};

/// Masses below this after an update count as a degenerate belief.
inline constexpr double kUnderflowFloor = 1e-300;

/// Weights equal to the model prior, timestep 0.
Belief initial_belief(const GhmmModel& model);

/// One Bayes step: w'_i ∝ b_i(obs) Σ_j A_ji w_j. Throws OutOfBoundsError for
/// observations outside the scene and DegenerateBeliefError when no state
/// keeps any mass.
Belief filter_update(const GhmmModel& model, const Belief& belief, Vec2 obs);

/// Same step with caller-supplied likelihoods (one per state, any positive
/// common scale).
Belief filter_update(const GhmmModel& model, const Belief& belief, std::span<const double> likelihoods);

/// Belief pushed once through A without an observation.
Belief propagate(const GhmmModel& model, const Belief& belief);

/// (node, mass) sorted by node id, renormalized.
std::vector<std::pair<NodeId, double>> position_marginal(const GhmmModel& model, const Belief& belief);

/// (goal, mass) sorted by goal id, renormalized.
std::vector<std::pair<GoalId, double>> goal_marginal(const GhmmModel& model, const Belief& belief);

/// Weighted mean of node centroids.
Vec2 expected_position(const GhmmModel& model, const Belief& belief);

/// Belief propagated `horizon` times, its expected position and the most
/// probable goal (ties to the lowest id). Throws InputError when horizon < 0.
PredictionResult predict(const GhmmModel& model, const Belief& belief, std::int64_t horizon);

double prediction_error(Vec2 predicted, Vec2 truth);

}  // namespace pedghmm
