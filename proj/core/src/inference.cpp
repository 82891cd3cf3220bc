#include "pedghmm/inference.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "pedghmm/error.hpp"

namespace pedghmm {
namespace {

void check_belief(const GhmmModel& model, const Belief& belief) {
  if (belief.weights.size() != model.state_count()) {
    throw InputError("belief has " + std::to_string(belief.weights.size()) + " weights, model has " +
                     std::to_string(model.state_count()) + " states");
  }
}

Belief normalized(std::vector<double> w, std::int64_t timestep) {
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(s > kUnderflowFloor) || !std::isfinite(s)) {
    throw DegenerateBeliefError("belief mass " + std::to_string(s) + " at timestep " + std::to_string(timestep));
  }
  for (double& v : w) v /= s;
  return {std::move(w), timestep};
}

}  // namespace

Belief initial_belief(const GhmmModel& model) {
  return {std::vector<double>(model.prior().begin(), model.prior().end()), 0};
}

Belief propagate(const GhmmModel& model, const Belief& belief) {
  check_belief(model, belief);
  std::vector<double> next(belief.weights.size(), 0.0);
  const auto& rows = model.rows();
  for (StateIndex j = 0; j < next.size(); ++j) {
    const double w = belief.weights[j];
    if (w == 0.0) continue;
    for (const Transition& t : rows[j].entries) next[t.to] += w * t.p;
  }
  return {std::move(next), belief.timestep + 1};
}

Belief filter_update(const GhmmModel& model, const Belief& belief, std::span<const double> likelihoods) {
  if (likelihoods.size() != model.state_count()) throw InputError("likelihood vector does not match the state count");
  Belief pred = propagate(model, belief);
  for (StateIndex i = 0; i < pred.weights.size(); ++i) pred.weights[i] *= likelihoods[i];
  return normalized(std::move(pred.weights), pred.timestep);
}

Belief filter_update(const GhmmModel& model, const Belief& belief, Vec2 obs) {
  if (!std::isfinite(obs.x) || !std::isfinite(obs.y)) throw InputError("non-finite observation");
  if (!model.bounds().contains(obs)) throw OutOfBoundsError("observation outside the scene bounds");
  std::vector<double> b(model.state_count());
  scaled_state_likelihoods(model, obs, b);
  return filter_update(model, belief, b);
}

std::vector<std::pair<NodeId, double>> position_marginal(const GhmmModel& model, const Belief& belief) {
  check_belief(model, belief);
  std::map<NodeId, double> acc;
  for (StateIndex i = 0; i < belief.weights.size(); ++i) acc[model.states()[i].node] += belief.weights[i];
  double total = 0.0;
  for (const auto& [n, w] : acc) total += w;
  std::vector<std::pair<NodeId, double>> out(acc.begin(), acc.end());
  if (total > 0.0) {
    for (auto& [n, w] : out) w /= total;
  }
  return out;
}

std::vector<std::pair<GoalId, double>> goal_marginal(const GhmmModel& model, const Belief& belief) {
  check_belief(model, belief);
  std::map<GoalId, double> acc;
  for (StateIndex i = 0; i < belief.weights.size(); ++i) acc[model.states()[i].goal] += belief.weights[i];
  double total = 0.0;
  for (const auto& [g, w] : acc) total += w;
  std::vector<std::pair<GoalId, double>> out(acc.begin(), acc.end());
  if (total > 0.0) {
    for (auto& [g, w] : out) w /= total;
  }
  return out;
}

Vec2 expected_position(const GhmmModel& model, const Belief& belief) {
  check_belief(model, belief);
  Vec2 p{0.0, 0.0};
  double total = 0.0;
  for (StateIndex i = 0; i < belief.weights.size(); ++i) {
    p = p + belief.weights[i] * model.state_position(i);
    total += belief.weights[i];
  }
  return total > 0.0 ? (1.0 / total) * p : p;
}

PredictionResult predict(const GhmmModel& model, const Belief& belief, std::int64_t horizon) {
  if (horizon < 0) throw InputError("prediction horizon must be >= 0");
  check_belief(model, belief);
  PredictionResult r;
  r.horizon = horizon;
  r.state_belief = belief;
  for (std::int64_t h = 0; h < horizon; ++h) r.state_belief = propagate(model, r.state_belief);
  r.expected_position = expected_position(model, r.state_belief);
  double best = -1.0;
  for (const auto& [g, w] : goal_marginal(model, r.state_belief)) {
    if (w > best) {
      best = w;
      r.map_goal = g;
    }
  }
  return r;
}

double prediction_error(Vec2 predicted, Vec2 truth) { return distance(predicted, truth); }

}  // namespace pedghmm
