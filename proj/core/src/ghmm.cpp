#include "pedghmm/ghmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "pedghmm/error.hpp"

namespace pedghmm {

// ---------------------------------------------------------------------------
// Small value types

const Goal* GoalSet::find(GoalId id) const {
  for (const Goal& g : goals) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

Goal& GoalSet::add(NodeId node, Vec2 point) {
  goals.push_back({next_id++, node, point});
  return goals.back();
}

GoalSet goals_from_pinned(const TopologicalMap& topo) {
  GoalSet set;
  for (const auto& [id, n] : topo.nodes()) {
    if (n.pinned) set.add(id, n.centroid);
  }
  return set;
}

void LearningConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvariantError("epsilon must be > 0");
  if (!(sigma_obs > 0.0) || !std::isfinite(sigma_obs)) throw InvariantError("sigma_obs must be > 0");
  if (!(bw_learning_rate > 0.0 && bw_learning_rate <= 1.0)) throw InvariantError("bw_learning_rate must lie in (0, 1]");
  if (!(pi0 > 0.0) || !std::isfinite(pi0)) throw InvariantError("pi0 must be > 0");
  if (!(a0 > 0.0) || !std::isfinite(a0)) throw InvariantError("a0 must be > 0");
  if (!(prior_strength > 0.0) || !std::isfinite(prior_strength)) throw InvariantError("prior_strength must be > 0");
  if (!(goal_merge_radius >= 0.0) || !std::isfinite(goal_merge_radius)) {
    throw InvariantError("goal_merge_radius must be >= 0");
  }
}

double TransitionRow::sum() const {
  double s = 0.0;
  for (const Transition& t : entries) s += t.p;
  return s;
}

const Transition* TransitionRow::find(StateIndex to) const {
  for (const Transition& t : entries) {
    if (t.to == to) return &t;
  }
  return nullptr;
}

double transition_seed(double alpha, double beta, bool is_self, double epsilon) {
  if (is_self) return 0.05;
  const double diff = beta - alpha;
  if (diff > 0.0 && std::abs(diff) > epsilon) return 0.8;
  if (diff < 0.0 && std::abs(diff) > epsilon) return 0.2;
  return 0.5;
}

// ---------------------------------------------------------------------------
// GhmmModel internals

bool operator==(const GhmmModel& a, const GhmmModel& b) { return a.p_ == b.p_; }

double GhmmModel::transition(StateIndex from, StateIndex to) const {
  const Transition* t = p_.rows.at(from).find(to);
  return t ? t->p : 0.0;
}

std::optional<StateIndex> GhmmModel::state_index(NodeId node, GoalId goal) const {
  auto it = index_.find({node, goal});
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool GhmmModel::transition_allowed(StateIndex from, StateIndex to) const {
  if (from == to) return true;
  const GhmmState& a = p_.states[from];
  const GhmmState& b = p_.states[to];
  if (a.goal != b.goal) return false;
  return p_.nodes.at(a.node).neighbors.contains(b.node);
}

void GhmmModel::rebuild_index() {
  index_.clear();
  state_pos_.resize(p_.states.size());
  for (StateIndex i = 0; i < p_.states.size(); ++i) {
    const GhmmState& s = p_.states[i];
    if (!index_.emplace(std::pair{s.node, s.goal}, i).second) {
      throw InvariantError("duplicate state (" + std::to_string(s.node) + ", " + std::to_string(s.goal) + ")");
    }
    auto it = p_.nodes.find(s.node);
    if (it == p_.nodes.end()) throw InvariantError("state references unknown node " + std::to_string(s.node));
    state_pos_[i] = it->second.centroid;
  }
}

void GhmmModel::check_invariants(double tol) const {
  const std::size_t n = p_.states.size();
  if (p_.prior.size() != n || p_.rows.size() != n) throw InvariantError("parameter sizes do not match the state count");
  if (!(p_.config.sigma_obs > 0.0)) throw InvariantError("observation covariance is not positive definite");
  for (const auto& [id, info] : p_.nodes) {
    for (NodeId m : info.neighbors) {
      if (m == id) throw InvariantError("self-edge on node " + std::to_string(id));
      auto it = p_.nodes.find(m);
      if (it == p_.nodes.end() || !it->second.neighbors.contains(id)) {
        throw InvariantError("asymmetric or dangling edge at node " + std::to_string(id));
      }
    }
  }
  for (const Goal& g : p_.goals.goals) {
    if (!p_.nodes.contains(g.node)) throw InvariantError("goal " + std::to_string(g.id) + " has no node");
  }
  for (const GhmmState& s : p_.states) {
    if (!p_.nodes.contains(s.node) || p_.goals.find(s.goal) == nullptr) {
      throw InvariantError("state references an unknown node or goal");
    }
  }
  double total = 0.0;
  for (double v : p_.prior) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvariantError("negative or non-finite prior entry");
    total += v;
  }
  if (n > 0 && std::abs(total - 1.0) > tol) throw InvariantError("prior does not sum to 1");
  for (StateIndex i = 0; i < n; ++i) {
    double row = 0.0;
    std::set<StateIndex> seen;
    for (const Transition& t : p_.rows[i].entries) {
      if (t.to >= n) throw InvariantError("transition to a missing state");
      if (!seen.insert(t.to).second) throw InvariantError("duplicate transition entry");
      if (!(t.p >= 0.0) || !std::isfinite(t.p)) throw InvariantError("negative or non-finite transition");
      if (t.p > 0.0 && !transition_allowed(i, t.to)) {
        throw InvariantError("transition " + std::to_string(i) + " -> " + std::to_string(t.to) +
                             " violates the structural sparsity");
      }
      row += t.p;
    }
    if (std::abs(row - 1.0) > tol) throw InvariantError("transition row " + std::to_string(i) + " does not sum to 1");
  }
}

GhmmModel GhmmModel::from_parts(Parts parts) {
  parts.config.validate();
  GhmmModel m;
  m.p_ = std::move(parts);
  m.rebuild_index();
  m.check_invariants();
  return m;
}

double GhmmModel::node_cost(const PotentialCostMap* map, Vec2 p) const {
  if (p_.policy == SeedPolicy::kCostMap) {
    if (map == nullptr) throw InputError("cost-seeded model needs a cost map");
    return sample_cost(*map, p);
  }
  return map != nullptr && map->contains(p) ? sample_cost(*map, p) : 1.0;
}

double GhmmModel::raw_prior(NodeId node) const {
  if (p_.policy == SeedPolicy::kPreset) return p_.config.pi0;
  return 1.0 - p_.nodes.at(node).cost;
}

double GhmmModel::raw_transition(NodeId from, NodeId to) const {
  if (p_.policy == SeedPolicy::kPreset) return p_.config.a0;
  const double alpha = p_.nodes.at(to).cost;
  const double beta = p_.nodes.at(from).cost;
  return transition_seed(alpha, beta, from == to, p_.config.epsilon);
}

void GhmmModel::add_prior_mass(std::span<const double> raw_new) {
  const double added = std::accumulate(raw_new.begin(), raw_new.end(), 0.0);
  const double scale = p_.prior_scale + added;
  if (scale > 0.0) {
    const double keep = p_.prior_scale / scale;
    for (double& v : p_.prior) v *= keep;
    for (double r : raw_new) p_.prior.push_back(r / scale);
    p_.prior_scale = scale;
  } else {
    p_.prior.insert(p_.prior.end(), raw_new.begin(), raw_new.end());
    const double u = 1.0 / static_cast<double>(p_.prior.size());
    std::fill(p_.prior.begin(), p_.prior.end(), u);
    p_.prior_scale = static_cast<double>(p_.prior.size());
  }
}

void GhmmModel::normalize_prior_after_removal() {
  if (p_.prior.empty()) return;
  const double s = std::accumulate(p_.prior.begin(), p_.prior.end(), 0.0);
  if (s > 0.0) {
    for (double& v : p_.prior) v /= s;
    p_.prior_scale *= s;
  } else {
    const double u = 1.0 / static_cast<double>(p_.prior.size());
    std::fill(p_.prior.begin(), p_.prior.end(), u);
    p_.prior_scale = static_cast<double>(p_.prior.size());
  }
}

void GhmmModel::add_entry(TransitionRow& row, StateIndex to, double seed) {
  const double scale = row.seed_scale + seed;
  const double keep = row.seed_scale / scale;
  for (Transition& t : row.entries) t.p *= keep;
  row.entries.push_back({to, seed / scale, seed, false});
  row.seed_scale = scale;
}

namespace {

void reset_row_to_seeds(TransitionRow& row) {
  double s = 0.0;
  for (const Transition& t : row.entries) s += t.seed;
  for (Transition& t : row.entries) {
    t.p = t.seed / s;
    t.learned = false;
  }
  row.seed_scale = s;
}

}  // namespace

void GhmmModel::remove_entry(TransitionRow& row, StateIndex to) {
  auto it = std::find_if(row.entries.begin(), row.entries.end(), [&](const Transition& t) { return t.to == to; });
  if (it == row.entries.end()) return;
  const double removed = it->p;
  row.entries.erase(it);
  if (row.entries.empty()) {
    row.seed_scale = 0.0;
    return;
  }
  const double rest = row.sum();
  if (rest > 0.0) {
    for (Transition& t : row.entries) t.p /= rest;
    row.seed_scale *= rest / (rest + removed);
  } else {
    reset_row_to_seeds(row);
  }
}

void GhmmModel::reseed_entry(TransitionRow& row, std::size_t k, double seed) {
  Transition& e = row.entries[k];
  if (e.seed == seed) return;
  const double raw_old = e.p * row.seed_scale;
  const double scale = row.seed_scale - raw_old + seed;
  e.seed = seed;
  if (!(scale > 0.0)) {
    reset_row_to_seeds(row);
    return;
  }
  const double keep = row.seed_scale / scale;
  for (std::size_t i = 0; i < row.entries.size(); ++i) {
    row.entries[i].p = i == k ? seed / scale : row.entries[i].p * keep;
  }
  row.seed_scale = scale;
}

void GhmmModel::append_goal_states(const Goal& goal) {
  const StateIndex base = p_.states.size();
  std::vector<double> raw;
  std::map<NodeId, StateIndex> local;
  for (const auto& [id, info] : p_.nodes) {
    local[id] = p_.states.size();
    p_.states.push_back({id, goal.id});
    raw.push_back(raw_prior(id));
  }
  for (const auto& [id, info] : p_.nodes) {
    TransitionRow row;
    row.mass = p_.config.prior_strength;
    row.entries.push_back({local[id], 0.0, raw_transition(id, id), false});
    for (NodeId m : info.neighbors) row.entries.push_back({local[m], 0.0, raw_transition(id, m), false});
    reset_row_to_seeds(row);
    p_.rows.push_back(std::move(row));
  }
  add_prior_mass(raw);
  (void)base;
  rebuild_index();
}

// ---------------------------------------------------------------------------
// Construction

GhmmModel build_model(const TopologicalMap& topo, const PotentialCostMap* map, const GoalSet& goals,
                      const LearningConfig& config, SeedPolicy policy) {
  config.validate();
  if (topo.empty()) throw InputError("cannot build a model from an empty topology");
  if (goals.empty()) throw InputError("cannot build a model without goals");
  GhmmModel m;
  m.p_.bounds = topo.bounds();
  m.p_.config = config;
  m.p_.policy = policy;
  m.p_.topology_revision = topo.revision();
  for (const auto& [id, n] : topo.nodes()) {
    NodeInfo info;
    info.centroid = n.centroid;
    info.cost = m.node_cost(map, n.centroid);
    info.neighbors = topo.neighbors(id);
    m.p_.nodes.emplace(id, std::move(info));
  }
  for (const Goal& g : goals.goals) {
    if (!topo.has_node(g.node)) throw InputError("goal " + std::to_string(g.id) + " refers to a missing node");
  }
  m.p_.goals = goals;

  for (const auto& [id, info] : m.p_.nodes) {
    for (const Goal& g : goals.goals) m.p_.states.push_back({id, g.id});
  }
  m.rebuild_index();

  std::vector<double> raw;
  raw.reserve(m.p_.states.size());
  for (const GhmmState& s : m.p_.states) raw.push_back(m.raw_prior(s.node));
  m.p_.prior_scale = 0.0;
  m.add_prior_mass(raw);
  m.p_.prior_mass = config.prior_strength;

  m.p_.rows.resize(m.p_.states.size());
  for (StateIndex i = 0; i < m.p_.states.size(); ++i) {
    const GhmmState& s = m.p_.states[i];
    TransitionRow& row = m.p_.rows[i];
    row.mass = config.prior_strength;
    row.entries.push_back({i, 0.0, m.raw_transition(s.node, s.node), false});
    for (NodeId nb : m.p_.nodes.at(s.node).neighbors) {
      row.entries.push_back({*m.state_index(nb, s.goal), 0.0, m.raw_transition(s.node, nb), false});
    }
    reset_row_to_seeds(row);
  }
  return m;
}

GhmmModel init_model_from_topology(const TopologicalMap& topo, const PotentialCostMap& map, const GoalSet& goals,
                                   const LearningConfig& config) {
  return build_model(topo, &map, goals, config, SeedPolicy::kCostMap);
}

GhmmModel init_preset_model(const TopologicalMap& topo, const GoalSet& goals, const LearningConfig& config) {
  return build_model(topo, nullptr, goals, config, SeedPolicy::kPreset);
}

// ---------------------------------------------------------------------------
// Structure updates

void GhmmModel::apply_delta(const TopologyDelta& delta, const PotentialCostMap* map) {
  if (delta.base_revision != p_.topology_revision) {
    throw StaleDeltaError("delta built against topology revision " + std::to_string(delta.base_revision) +
                          ", model is at " + std::to_string(p_.topology_revision));
  }
  // Validate everything before touching the model.
  std::set<TopoEdge> removed_edges(delta.edges_removed.begin(), delta.edges_removed.end());
  std::set<NodeId> removed_nodes(delta.nodes_removed.begin(), delta.nodes_removed.end());
  std::set<NodeId> added_nodes;
  for (const NodeMove& mv : delta.nodes_moved) {
    auto it = p_.nodes.find(mv.id);
    if (it == p_.nodes.end() || it->second.centroid != mv.from) throw StaleDeltaError("moved node does not match");
    if (!p_.bounds.contains(mv.to)) throw StaleDeltaError("node moved outside bounds");
  }
  for (const TopoEdge& e : delta.edges_removed) {
    auto it = p_.nodes.find(e.lo);
    if (it == p_.nodes.end() || !it->second.neighbors.contains(e.hi)) throw StaleDeltaError("removed edge does not exist");
  }
  for (NodeId id : delta.nodes_removed) {
    auto it = p_.nodes.find(id);
    if (it == p_.nodes.end()) throw StaleDeltaError("removed node " + std::to_string(id) + " does not exist");
    for (NodeId m : it->second.neighbors) {
      if (!removed_edges.contains(TopoEdge(id, m))) throw StaleDeltaError("removed node still has edges");
    }
    for (const Goal& g : p_.goals.goals) {
      if (g.node == id) throw StaleDeltaError("delta removes goal node " + std::to_string(id));
    }
  }
  for (const TopoNode& n : delta.nodes_added) {
    if (p_.nodes.contains(n.id) || !added_nodes.insert(n.id).second) {
      throw StaleDeltaError("added node " + std::to_string(n.id) + " already exists");
    }
    if (!p_.bounds.contains(n.centroid)) throw StaleDeltaError("added node outside bounds");
  }
  auto alive = [&](NodeId id) {
    return added_nodes.contains(id) || (p_.nodes.contains(id) && !removed_nodes.contains(id));
  };
  for (const TopoEdge& e : delta.edges_added) {
    if (e.lo == e.hi || !alive(e.lo) || !alive(e.hi)) throw StaleDeltaError("added edge does not fit the model");
    auto it = p_.nodes.find(e.lo);
    if (it != p_.nodes.end() && it->second.neighbors.contains(e.hi) && !removed_edges.contains(e)) {
      throw StaleDeltaError("added edge already exists");
    }
  }

  const bool cost_seeded = p_.policy == SeedPolicy::kCostMap;

  // Moves.
  for (const NodeMove& mv : delta.nodes_moved) {
    NodeInfo& info = p_.nodes.at(mv.id);
    info.centroid = mv.to;
    for (Goal& g : p_.goals.goals) {
      if (g.node == mv.id) g.point = mv.to;
    }
    for (auto it = index_.lower_bound({mv.id, 0}); it != index_.end() && it->first.first == mv.id; ++it) {
      state_pos_[it->second] = mv.to;
    }
    const double cost = node_cost(map, mv.to);
    if (cost == info.cost) continue;
    info.cost = cost;
    if (!cost_seeded) continue;
    for (const Goal& g : p_.goals.goals) {
      const StateIndex i = index_.at({mv.id, g.id});
      TransitionRow& row = p_.rows[i];
      for (std::size_t k = 0; k < row.entries.size(); ++k) {
        const Transition& t = row.entries[k];
        if (t.to == i || t.learned) continue;
        reseed_entry(row, k, raw_transition(mv.id, p_.states[t.to].node));
      }
      for (NodeId m : info.neighbors) {
        TransitionRow& in = p_.rows[index_.at({m, g.id})];
        for (std::size_t k = 0; k < in.entries.size(); ++k) {
          if (in.entries[k].to == i && !in.entries[k].learned) reseed_entry(in, k, raw_transition(m, mv.id));
        }
      }
    }
  }

  // Edge removals.
  for (const TopoEdge& e : delta.edges_removed) {
    p_.nodes.at(e.lo).neighbors.erase(e.hi);
    p_.nodes.at(e.hi).neighbors.erase(e.lo);
    for (const Goal& g : p_.goals.goals) {
      const StateIndex a = index_.at({e.lo, g.id});
      const StateIndex b = index_.at({e.hi, g.id});
      remove_entry(p_.rows[a], b);
      remove_entry(p_.rows[b], a);
    }
  }

  // Node removals: compact the state space.
  if (!delta.nodes_removed.empty()) {
    std::vector<StateIndex> remap(p_.states.size(), std::numeric_limits<StateIndex>::max());
    std::vector<GhmmState> states;
    std::vector<double> prior;
    std::vector<TransitionRow> rows;
    for (StateIndex i = 0; i < p_.states.size(); ++i) {
      if (removed_nodes.contains(p_.states[i].node)) continue;
      remap[i] = states.size();
      states.push_back(p_.states[i]);
      prior.push_back(p_.prior[i]);
      rows.push_back(std::move(p_.rows[i]));
    }
    for (TransitionRow& row : rows) {
      for (Transition& t : row.entries) t.to = remap[t.to];
    }
    p_.states = std::move(states);
    p_.prior = std::move(prior);
    p_.rows = std::move(rows);
    for (NodeId id : delta.nodes_removed) p_.nodes.erase(id);
    normalize_prior_after_removal();
    rebuild_index();
  }

  // Node additions.
  if (!delta.nodes_added.empty()) {
    std::vector<double> raw;
    for (const TopoNode& n : delta.nodes_added) {
      NodeInfo info;
      info.centroid = n.centroid;
      info.cost = node_cost(map, n.centroid);
      p_.nodes.emplace(n.id, std::move(info));
      for (const Goal& g : p_.goals.goals) {
        const StateIndex i = p_.states.size();
        p_.states.push_back({n.id, g.id});
        raw.push_back(raw_prior(n.id));
        TransitionRow row;
        row.mass = p_.config.prior_strength;
        row.entries.push_back({i, 1.0, raw_transition(n.id, n.id), false});
        row.seed_scale = row.entries.front().seed;
        p_.rows.push_back(std::move(row));
      }
    }
    add_prior_mass(raw);
    rebuild_index();
  }

  // Edge additions.
  for (const TopoEdge& e : delta.edges_added) {
    p_.nodes.at(e.lo).neighbors.insert(e.hi);
    p_.nodes.at(e.hi).neighbors.insert(e.lo);
    for (const Goal& g : p_.goals.goals) {
      const StateIndex a = index_.at({e.lo, g.id});
      const StateIndex b = index_.at({e.hi, g.id});
      add_entry(p_.rows[a], b, raw_transition(e.lo, e.hi));
      add_entry(p_.rows[b], a, raw_transition(e.hi, e.lo));
    }
  }

  p_.topology_revision = delta.base_revision + 1;
}

std::size_t GhmmModel::discover_goals(const TopologicalMap& topo) {
  std::size_t added = 0;
  for (const auto& [id, n] : topo.nodes()) {
    if (n.dwell_accumulator < p_.config.dwell_threshold) continue;
    auto it = p_.nodes.find(id);
    if (it == p_.nodes.end()) continue;
    const Vec2 point = it->second.centroid;
    const bool near_existing = std::any_of(p_.goals.goals.begin(), p_.goals.goals.end(), [&](const Goal& g) {
      return g.node == id || distance(g.point, point) <= p_.config.goal_merge_radius;
    });
    if (near_existing) continue;
    const Goal goal = p_.goals.add(id, point);
    append_goal_states(goal);
    ++added;
  }
  return added;
}

GhmmModel apply_topology_delta(GhmmModel model, const TopologyDelta& delta, const PotentialCostMap& map) {
  model.apply_delta(delta, &map);
  return model;
}

GhmmModel update_goals(GhmmModel model, const TopologicalMap& topo) {
  model.discover_goals(topo);
  return model;
}

// ---------------------------------------------------------------------------
// Observation model

double observation_log_likelihood(const GhmmModel& model, StateIndex state, Vec2 obs) {
  const double var = model.sigma() * model.sigma();
  const double d2 = squared_distance(obs, model.state_position(state));
  return -d2 / (2.0 * var) - std::log(2.0 * std::numbers::pi * var);
}

double observation_likelihood(const GhmmModel& model, StateIndex state, Vec2 obs) {
  return std::exp(observation_log_likelihood(model, state, obs));
}

double scaled_state_likelihoods(const GhmmModel& model, Vec2 obs, std::span<double> out, std::optional<GoalId> goal) {
  const std::size_t n = model.state_count();
  if (out.size() != n) throw InputError("likelihood buffer does not match the state count");
  if (goal && model.goals().find(*goal) == nullptr) throw InputError("unknown goal " + std::to_string(*goal));
  const double var = model.sigma() * model.sigma();
  double best = -std::numeric_limits<double>::infinity();
  for (StateIndex i = 0; i < n; ++i) {
    if (goal && model.states()[i].goal != *goal) {
      out[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    out[i] = -squared_distance(obs, model.state_position(i)) / (2.0 * var);
    best = std::max(best, out[i]);
  }
  if (!std::isfinite(best)) throw NumericalError("no state can explain the observation");
  for (double& v : out) v = std::exp(v - best);
  return best - std::log(2.0 * std::numbers::pi * var);
}

// ---------------------------------------------------------------------------
// Learning

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_sequence(const GhmmModel& model, const ObservationSequence& seq) {
  for (const Vec2& o : seq.positions) {
    if (!std::isfinite(o.x) || !std::isfinite(o.y)) throw InputError("non-finite observation");
    if (!model.bounds().contains(o)) throw OutOfBoundsError("observation outside the scene bounds");
  }
}

// Log observation densities of every state; -inf for states of other goals.
void log_likelihoods(const GhmmModel& model, Vec2 obs, std::optional<GoalId> goal, double* out) {
  const double var = model.sigma() * model.sigma();
  const double norm = std::log(2.0 * std::numbers::pi * var);
  for (StateIndex i = 0; i < model.state_count(); ++i) {
    out[i] = goal && model.states()[i].goal != *goal
                 ? kNegInf
                 : -squared_distance(obs, model.state_position(i)) / (2.0 * var) - norm;
  }
}

// Turns log weights into normalized weights; returns the log of their sum.
double normalize_log(const double* lw, double* w, std::size_t n) {
  double top = kNegInf;
  for (std::size_t i = 0; i < n; ++i) top = std::max(top, lw[i]);
  if (!std::isfinite(top)) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(lw[i] - top);
    s += w[i];
  }
  for (std::size_t i = 0; i < n; ++i) w[i] /= s;
  return top + std::log(s);
}

// Forward recursion with normalized alphas. Row t of `alpha` holds
// P(S_t | O_1:t); returns log P(O_1:T), -inf when impossible.
double forward(const GhmmModel& model, const ObservationSequence& seq, std::vector<double>& alpha,
               std::vector<double>& logb) {
  const std::size_t n = model.state_count();
  const std::size_t T = seq.positions.size();
  alpha.assign(T * n, 0.0);
  logb.assign(T * n, 0.0);
  for (std::size_t t = 0; t < T; ++t) log_likelihoods(model, seq.positions[t], seq.goal, &logb[t * n]);
  std::vector<double> la(n), pred(n);
  for (StateIndex i = 0; i < n; ++i) la[i] = std::log(model.prior()[i]) + logb[i];
  double loglik = normalize_log(la.data(), &alpha[0], n);
  for (std::size_t t = 1; t < T && std::isfinite(loglik); ++t) {
    std::fill(pred.begin(), pred.end(), 0.0);
    const double* a = &alpha[(t - 1) * n];
    for (StateIndex j = 0; j < n; ++j) {
      if (a[j] == 0.0) continue;
      for (const Transition& tr : model.rows()[j].entries) pred[tr.to] += a[j] * tr.p;
    }
    for (StateIndex i = 0; i < n; ++i) la[i] = std::log(pred[i]) + logb[t * n + i];
    loglik += normalize_log(la.data(), &alpha[t * n], n);
  }
  return loglik;
}

}  // namespace

void GhmmModel::learn(const ObservationSequence& seq, double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw InputError("learning rate must lie in [0, 1]");
  const std::size_t T = seq.positions.size();
  if (T < 2) throw InputError("Baum-Welch needs at least 2 observations");
  check_sequence(*this, seq);
  if (seq.goal && p_.goals.find(*seq.goal) == nullptr) throw InputError("unknown goal " + std::to_string(*seq.goal));
  if (rate == 0.0) return;

  const std::size_t n = p_.states.size();
  std::vector<double> alpha, logb;
  if (!std::isfinite(forward(*this, seq, alpha, logb))) {
    throw NumericalError("sequence has zero likelihood under the model");
  }

  // Backward recursion in log space, shifted to a zero maximum per step.
  // gamma and xi are normalized per step, so the shift cancels.
  std::vector<double> lbeta(T * n, 0.0);
  std::vector<double> terms;
  for (std::size_t t = T - 1; t-- > 0;) {
    const double* lb = &logb[(t + 1) * n];
    const double* next = &lbeta[(t + 1) * n];
    double* cur = &lbeta[t * n];
    double top = kNegInf;
    for (StateIndex j = 0; j < n; ++j) {
      double m = kNegInf;
      terms.clear();
      for (const Transition& tr : p_.rows[j].entries) {
        if (tr.p <= 0.0) continue;
        terms.push_back(std::log(tr.p) + lb[tr.to] + next[tr.to]);
        m = std::max(m, terms.back());
      }
      double acc = 0.0;
      if (std::isfinite(m)) {
        for (double v : terms) acc += std::exp(v - m);
      }
      cur[j] = std::isfinite(m) ? m + std::log(acc) : kNegInf;
      top = std::max(top, cur[j]);
    }
    if (!std::isfinite(top)) throw NumericalError("backward pass vanished at step " + std::to_string(t));
    for (StateIndex j = 0; j < n; ++j) cur[j] -= top;
  }

  // Expected transition counts, each step's xi normalized to 1.
  std::vector<std::vector<double>> xi(n);
  std::vector<std::vector<double>> lx(n);
  for (StateIndex j = 0; j < n; ++j) {
    xi[j].assign(p_.rows[j].entries.size(), 0.0);
    lx[j].assign(p_.rows[j].entries.size(), kNegInf);
  }
  for (std::size_t t = 0; t + 1 < T; ++t) {
    const double* a = &alpha[t * n];
    const double* lb = &logb[(t + 1) * n];
    const double* next = &lbeta[(t + 1) * n];
    double top = kNegInf;
    for (StateIndex j = 0; j < n; ++j) {
      if (a[j] == 0.0) continue;
      const double la = std::log(a[j]);
      const auto& entries = p_.rows[j].entries;
      for (std::size_t k = 0; k < entries.size(); ++k) {
        lx[j][k] = entries[k].p > 0.0 ? la + std::log(entries[k].p) + lb[entries[k].to] + next[entries[k].to] : kNegInf;
        top = std::max(top, lx[j][k]);
      }
    }
    if (!std::isfinite(top)) throw NumericalError("sequence likelihood vanished at step " + std::to_string(t + 1));
    double total = 0.0;
    for (StateIndex j = 0; j < n; ++j) {
      if (a[j] == 0.0) continue;
      for (double& v : lx[j]) {
        v = std::exp(v - top);
        total += v;
      }
    }
    for (StateIndex j = 0; j < n; ++j) {
      if (a[j] == 0.0) continue;
      for (std::size_t k = 0; k < lx[j].size(); ++k) {
        xi[j][k] += lx[j][k] / total;
        lx[j][k] = kNegInf;
      }
    }
  }

  // Blend the statistics into the parameters.
  for (StateIndex j = 0; j < n; ++j) {
    const double occupancy = std::accumulate(xi[j].begin(), xi[j].end(), 0.0);
    if (!(occupancy > 0.0)) continue;
    TransitionRow& row = p_.rows[j];
    const double old_mass = (1.0 - rate) * row.mass;
    const double mass = old_mass + rate * occupancy;
    for (std::size_t k = 0; k < row.entries.size(); ++k) {
      Transition& tr = row.entries[k];
      tr.p = (old_mass * tr.p + rate * xi[j][k]) / mass;
      tr.learned = true;
    }
    row.mass = mass;
  }
  std::vector<double> lg(n), gamma(n);
  for (StateIndex i = 0; i < n; ++i) lg[i] = alpha[i] > 0.0 ? std::log(alpha[i]) + lbeta[i] : kNegInf;
  if (!std::isfinite(normalize_log(lg.data(), gamma.data(), n))) {
    throw NumericalError("initial state occupancy vanished");
  }
  const double old_mass = (1.0 - rate) * p_.prior_mass;
  const double mass = old_mass + rate;
  for (StateIndex i = 0; i < n; ++i) p_.prior[i] = (old_mass * p_.prior[i] + rate * gamma[i]) / mass;
  p_.prior_mass = mass;
}

GhmmModel incremental_baum_welch(GhmmModel model, const ObservationSequence& sequence) {
  const double rate = model.config().bw_learning_rate;
  model.learn(sequence, rate);
  return model;
}

GhmmModel incremental_baum_welch(GhmmModel model, const ObservationSequence& sequence, double rate) {
  model.learn(sequence, rate);
  return model;
}

double sequence_loglik(const GhmmModel& model, const ObservationSequence& seq) {
  if (seq.positions.empty()) throw InputError("log-likelihood needs at least 1 observation");
  check_sequence(model, seq);
  if (seq.goal && model.goals().find(*seq.goal) == nullptr) {
    throw InputError("unknown goal " + std::to_string(*seq.goal));
  }
  std::vector<double> alpha, logb;
  return forward(model, seq, alpha, logb);
}

}  // namespace pedghmm
