#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "pedghmm/cost_map.hpp"
#include "pedghmm/geometry.hpp"
#include "pedghmm/topology.hpp"

namespace pedghmm {

using GoalId = std::uint32_t;
using StateIndex = std::size_t;

struct Goal {
  GoalId id = 0;
  NodeId node = 0;
  Vec2 point;
  friend bool operator==(const Goal&, const Goal&) = default;
};

/// Goals in id order. Goal points coincide with (pinned) node centroids.
struct GoalSet {
  std::vector<Goal> goals;
  GoalId next_id = 0;

  const Goal* find(GoalId id) const;
  Goal& add(NodeId node, Vec2 point);
  std::size_t size() const { return goals.size(); }
  bool empty() const { return goals.empty(); }
  friend bool operator==(const GoalSet&, const GoalSet&) = default;
};

/// One goal per pinned node of the topology, in node id order.
GoalSet goals_from_pinned(const TopologicalMap& topo);

struct LearningConfig {
  /// Cost-difference threshold of the transition seed.
  double epsilon = 0.05;
  /// Observation std-dev (m); covariance is sigma_obs^2 * I.
  double sigma_obs = 1.0;
  /// Consecutive timesteps at one node that make it a goal.
  std::uint64_t dwell_threshold = 40;
  /// Blend rate of the expected sufficient statistics, in (0, 1].
  double bw_learning_rate = 0.1;
  /// Constant seeds of preset-prior (baseline) models.
  double pi0 = 0.5;
  double a0 = 0.5;
  /// Statistic mass attributed to seeded parameters before any learning.
  double prior_strength = 1.0;
  /// Discovered goals closer than this to an existing goal are ignored.
  double goal_merge_radius = 1.0;

  /// Throws InvariantError on out-of-range values.
  void validate() const;
  friend bool operator==(const LearningConfig&, const LearningConfig&) = default;
};

/// How new states and transitions are seeded.
enum class SeedPolicy : std::uint8_t {
  kCostMap = 0,  ///< priors 1 - f(n), transitions from the cost-difference rule
  kPreset = 1,   ///< constant pi0 / a0
};

struct GhmmState {
  NodeId node = 0;
  GoalId goal = 0;
  friend bool operator==(const GhmmState&, const GhmmState&) = default;
};

struct Transition {
  StateIndex to = 0;
  double p = 0.0;
  /// Unnormalized seed weight this entry was created (or last re-seeded) with.
  double seed = 0.0;
  bool learned = false;
  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Outgoing transitions of one state. `seed_scale` is the raw seed mass the
/// probabilities are normalized against, so newly seeded entries join at the
/// weight they would have had at initialization. `mass` is the statistic
/// strength blended against by incremental learning.
struct TransitionRow {
  std::vector<Transition> entries;
  double seed_scale = 0.0;
  double mass = 0.0;

  double sum() const;
  const Transition* find(StateIndex to) const;
  friend bool operator==(const TransitionRow&, const TransitionRow&) = default;
};

struct NodeInfo {
  Vec2 centroid;
  /// f(n) sampled from the cost map at the centroid.
  double cost = 1.0;
  std::set<NodeId> neighbors;
  friend bool operator==(const NodeInfo&, const NodeInfo&) = default;
};

/// Observations of one trajectory, optionally tagged with its goal. A tagged
/// sequence restricts learning to the states of that goal.
struct ObservationSequence {
  std::vector<Vec2> positions;
  std::optional<GoalId> goal;
};

/// The growing HMM (prior, transitions, Gaussian observation model).
class GhmmModel {
 public:
  /// Complete internal state; used by serialization and by tests that
  /// build models with explicit parameters.
  struct Parts {
    Rect bounds;
    LearningConfig config;
    SeedPolicy policy = SeedPolicy::kCostMap;
    std::map<NodeId, NodeInfo> nodes;
    GoalSet goals;
    std::vector<GhmmState> states;
    std::vector<double> prior;
    double prior_scale = 1.0;
    double prior_mass = 1.0;
    std::vector<TransitionRow> rows;
    std::uint64_t topology_revision = 0;

    friend bool operator==(const Parts&, const Parts&) = default;
  };

  GhmmModel() = default;

  /// Validates and takes ownership of `parts`. Throws InvariantError.
  static GhmmModel from_parts(Parts parts);
  const Parts& parts() const { return p_; }

  const Rect& bounds() const { return p_.bounds; }
  const LearningConfig& config() const { return p_.config; }
  SeedPolicy policy() const { return p_.policy; }
  double sigma() const { return p_.config.sigma_obs; }
  const std::map<NodeId, NodeInfo>& nodes() const { return p_.nodes; }
  const GoalSet& goals() const { return p_.goals; }
  const std::vector<GhmmState>& states() const { return p_.states; }
  std::size_t state_count() const { return p_.states.size(); }
  std::span<const double> prior() const { return p_.prior; }
  const std::vector<TransitionRow>& rows() const { return p_.rows; }
  std::uint64_t topology_revision() const { return p_.topology_revision; }

  /// A_ij; zero for structurally absent transitions.
  double transition(StateIndex from, StateIndex to) const;
  std::optional<StateIndex> state_index(NodeId node, GoalId goal) const;
  Vec2 state_position(StateIndex i) const { return state_pos_[i]; }

  /// True when i -> j may carry probability: i == j, or same goal and
  /// edge-connected nodes.
  bool transition_allowed(StateIndex from, StateIndex to) const;

  /// Checks stochasticity (within tol), nonnegativity and structural
  /// sparsity. Throws InvariantError describing the first violation.
  void check_invariants(double tol = 1e-9) const;

  friend bool operator==(const GhmmModel& a, const GhmmModel& b);

  // Mutators behind the value-returning operations below.
  void apply_delta(const TopologyDelta& delta, const PotentialCostMap* map);
  std::size_t discover_goals(const TopologicalMap& topo);
  void learn(const ObservationSequence& sequence, double rate);

 private:
  friend GhmmModel build_model(const TopologicalMap&, const PotentialCostMap*, const GoalSet&, const LearningConfig&,
                               SeedPolicy);

  void rebuild_index();
  double raw_prior(NodeId node) const;
  double raw_transition(NodeId from, NodeId to) const;
  double node_cost(const PotentialCostMap* map, Vec2 p) const;
  void append_goal_states(const Goal& goal);
  void add_prior_mass(std::span<const double> raw_new);
  void normalize_prior_after_removal();
  void add_entry(TransitionRow& row, StateIndex to, double seed);
  void remove_entry(TransitionRow& row, StateIndex to);
  void reseed_entry(TransitionRow& row, std::size_t k, double seed);

  Parts p_;
  std::map<std::pair<NodeId, GoalId>, StateIndex> index_;
  std::vector<Vec2> state_pos_;
};

/// Unnormalized transition weight toward a node of cost `alpha` from a node
/// of cost `beta`: 0.05 for a self transition, otherwise 0.8 when moving to
/// clearly lower cost, 0.2 when moving to clearly higher cost, 0.5 within
/// epsilon.
double transition_seed(double alpha, double beta, bool is_self, double epsilon);

/// States are node x goal, node-major in id order. Priors 1 - f(n) and
/// transition seeds over same-goal topology edges plus self-loops, each
/// normalized. Throws InputError for empty topology/goals or nodes outside
/// the map.
GhmmModel init_model_from_topology(const TopologicalMap& topo, const PotentialCostMap& map, const GoalSet& goals,
                                   const LearningConfig& config);

/// Same structure with constant priors pi0 and transition weights a0.
GhmmModel init_preset_model(const TopologicalMap& topo, const GoalSet& goals, const LearningConfig& config);

/// Mirrors a topology delta in the state space. Throws StaleDeltaError.
GhmmModel apply_topology_delta(GhmmModel model, const TopologyDelta& delta, const PotentialCostMap& map);

/// Turns nodes whose dwell reached the threshold into goals and adds the
/// corresponding states.
GhmmModel update_goals(GhmmModel model, const TopologicalMap& topo);

/// Bivariate Gaussian density at `obs` around the state's node centroid.
double observation_likelihood(const GhmmModel& model, StateIndex state, Vec2 obs);
double observation_log_likelihood(const GhmmModel& model, StateIndex state, Vec2 obs);

/// Likelihoods of every state divided by a common factor (their maximum);
/// returns the log of that factor. States of other goals get 0 when `goal`
/// is set. Throws InputError for an unknown goal.
double scaled_state_likelihoods(const GhmmModel& model, Vec2 obs, std::span<double> out,
                                std::optional<GoalId> goal = std::nullopt);

/// One incremental Baum-Welch step over the whole sequence at the model's
/// configured rate (or `rate`, in [0, 1]). Rate 1 is a plain Baum-Welch
/// re-estimation of pi and A; rate 0 returns the model untouched.
/// Throws OutOfBoundsError, or NumericalError when the sequence has zero
/// likelihood under the model.
GhmmModel incremental_baum_welch(GhmmModel model, const ObservationSequence& sequence);
GhmmModel incremental_baum_welch(GhmmModel model, const ObservationSequence& sequence, double rate);

/// log P(O_1:T) by the scaled forward recursion; -inf when impossible.
double sequence_loglik(const GhmmModel& model, const ObservationSequence& sequence);

}  // namespace pedghmm
