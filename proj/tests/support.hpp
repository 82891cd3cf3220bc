#pragma once

// Test fixtures and brute-force oracles. Nothing here calls into the
// library's inference or learning code: the oracles enumerate state paths
// over dense copies of the parameters.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "pedghmm/delaunay.hpp"
#include "pedghmm/ghmm.hpp"

namespace pedghmm::testing {

using Matrix = std::vector<std::vector<double>>;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Random model with node-major states over `nodes` x `goals`, fully
/// populated allowed transitions and random positive parameters.
inline GhmmModel random_model(std::mt19937_64& rng, std::size_t node_count, std::size_t goal_count,
                              double sigma = 0.0) {
  GhmmModel::Parts p;
  p.bounds = {{0.0, 0.0}, {10.0, 10.0}};
  p.config.sigma_obs = sigma > 0.0 ? sigma : uniform(rng, 1.0, 3.0);
  for (NodeId id = 0; id < node_count; ++id) {
    NodeInfo info;
    info.centroid = {uniform(rng, 0.0, 10.0), uniform(rng, 0.0, 10.0)};
    info.cost = uniform(rng, 0.05, 1.0);
    p.nodes[id] = info;
  }
  for (NodeId id = 0; id + 1 < node_count; ++id) {
    p.nodes[id].neighbors.insert(id + 1);
    p.nodes[id + 1].neighbors.insert(id);
  }
  if (node_count >= 3 && pick(rng, 0, 1) == 1) {
    p.nodes[0].neighbors.insert(static_cast<NodeId>(node_count - 1));
    p.nodes[static_cast<NodeId>(node_count - 1)].neighbors.insert(0);
  }
  for (std::size_t g = 0; g < goal_count; ++g) {
    const NodeId at = static_cast<NodeId>(g % node_count);
    p.goals.add(at, p.nodes[at].centroid);
  }
  for (const auto& [id, info] : p.nodes) {
    for (const Goal& g : p.goals.goals) p.states.push_back({id, g.id});
  }
  const std::size_t n = p.states.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p.prior.push_back(uniform(rng, 0.05, 1.0));
    total += p.prior.back();
  }
  for (double& v : p.prior) v /= total;
  for (std::size_t i = 0; i < n; ++i) {
    TransitionRow row;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const GhmmState& a = p.states[i];
      const GhmmState& b = p.states[j];
      const bool allowed = i == j || (a.goal == b.goal && p.nodes[a.node].neighbors.contains(b.node));
      if (!allowed) continue;
      const double w = uniform(rng, 0.05, 1.0);
      row.entries.push_back({j, w, w, false});
      sum += w;
    }
    for (Transition& t : row.entries) t.p /= sum;
    row.seed_scale = sum;
    row.mass = 1.0;
    p.rows.push_back(std::move(row));
  }
  return GhmmModel::from_parts(std::move(p));
}

// Chain of nodes at x = 1, 2, 3, ... on y = 5 with a hand-set row-stochastic A.
inline GhmmModel chain_model(const std::vector<std::vector<double>>& a, std::vector<double> pi, double sigma = 1.0) {
  GhmmModel::Parts p;
  p.bounds = {{0, 0}, {10, 10}};
  p.config.sigma_obs = sigma;
  const std::size_t n = a.size();
  for (NodeId id = 0; id < n; ++id) {
    p.nodes[id].centroid = {1.0 + id, 5.0};
    if (id > 0) {
      p.nodes[id].neighbors.insert(id - 1);
      p.nodes[id - 1].neighbors.insert(id);
    }
  }
  p.goals.add(0, p.nodes[0].centroid);
  for (NodeId id = 0; id < n; ++id) p.states.push_back({id, 0});
  p.prior = std::move(pi);
  for (std::size_t i = 0; i < n; ++i) {
    TransitionRow row;
    for (std::size_t j = 0; j < n; ++j) {
      if (a[i][j] > 0.0) row.entries.push_back({j, a[i][j], a[i][j], false});
    }
    row.seed_scale = 1.0;
    row.mass = 1.0;
    p.rows.push_back(row);
  }
  return GhmmModel::from_parts(std::move(p));
}

/// Random shape with at most `max_states` states.
inline GhmmModel random_small_model(std::mt19937_64& rng, std::size_t max_states = 4) {
  const std::size_t goals = pick(rng, 1, std::min<std::size_t>(2, max_states));
  const std::size_t nodes = pick(rng, 1, max_states / goals);
  return random_model(rng, nodes, goals);
}

inline std::vector<Vec2> random_observations(std::mt19937_64& rng, std::size_t count) {
  std::vector<Vec2> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back({uniform(rng, 0.0, 10.0), uniform(rng, 0.0, 10.0)});
  return out;
}

/// Dense view of a model's parameters.
struct Dense {
  std::size_t n = 0;
  std::vector<double> pi;
  Matrix a;
  std::vector<Vec2> mean;
  std::vector<NodeId> node;
  std::vector<GoalId> goal;
  double sigma = 1.0;

  explicit Dense(const GhmmModel& m) : n(m.state_count()), pi(m.prior().begin(), m.prior().end()), sigma(m.sigma()) {
    a.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (const Transition& t : m.rows()[i].entries) a[i][t.to] = t.p;
      const GhmmState& s = m.states()[i];
      node.push_back(s.node);
      goal.push_back(s.goal);
      mean.push_back(m.nodes().at(s.node).centroid);
    }
  }

  double density(std::size_t i, Vec2 o) const {
    const double dx = o.x - mean[i].x;
    const double dy = o.y - mean[i].y;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)) / (2.0 * std::numbers::pi * sigma * sigma);
  }
};

/// Calls fn(path) for every state path of the given length.
inline void for_each_path(std::size_t n, std::size_t length, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> path(length, 0);
  while (true) {
    fn(path);
    std::size_t k = 0;
    while (k < length && ++path[k] == n) path[k++] = 0;
    if (k == length) return;
  }
}

/// P(S_{T+H} | O_1..O_T) where S_0 ~ pi is hidden and O_t is emitted by S_t.
inline std::vector<double> brute_filter(const Dense& d, const std::vector<Vec2>& obs, std::size_t horizon = 0) {
  const std::size_t T = obs.size();
  std::vector<double> post(d.n, 0.0);
  for_each_path(d.n, T + 1 + horizon, [&](const std::vector<std::size_t>& s) {
    double w = d.pi[s[0]];
    for (std::size_t t = 1; t < s.size() && w > 0.0; ++t) {
      w *= d.a[s[t - 1]][s[t]];
      if (t <= T) w *= d.density(s[t], obs[t - 1]);
    }
    post[s.back()] += w;
  });
  double z = 0.0;
  for (double v : post) z += v;
  for (double& v : post) v /= z;
  return post;
}

/// Weight of one path under the standard HMM reading: S_1 ~ pi emits O_1.
inline double path_weight(const Dense& d, const std::vector<Vec2>& obs, const std::vector<std::size_t>& s) {
  double w = d.pi[s[0]] * d.density(s[0], obs[0]);
  for (std::size_t t = 1; t < s.size() && w > 0.0; ++t) w *= d.a[s[t - 1]][s[t]] * d.density(s[t], obs[t]);
  return w;
}

inline double brute_loglik(const Dense& d, const std::vector<Vec2>& obs) {
  double total = 0.0;
  for_each_path(d.n, obs.size(), [&](const std::vector<std::size_t>& s) { total += path_weight(d, obs, s); });
  return std::log(total);
}

/// One batch Baum-Welch re-estimation from exact path posteriors. Rows the
/// sequence never leaves keep their old values.
struct EmStep {
  std::vector<double> pi;
  Matrix a;
};

inline EmStep brute_em(const Dense& d, const std::vector<Vec2>& obs) {
  const std::size_t T = obs.size();
  std::vector<double> gamma1(d.n, 0.0);
  std::vector<double> occupancy(d.n, 0.0);
  Matrix xi(d.n, std::vector<double>(d.n, 0.0));
  double z = 0.0;
  for_each_path(d.n, T, [&](const std::vector<std::size_t>& s) {
    const double w = path_weight(d, obs, s);
    z += w;
    gamma1[s[0]] += w;
    for (std::size_t t = 0; t + 1 < T; ++t) {
      xi[s[t]][s[t + 1]] += w;
      occupancy[s[t]] += w;
    }
  });
  EmStep out{std::vector<double>(d.n), d.a};
  for (std::size_t i = 0; i < d.n; ++i) {
    out.pi[i] = gamma1[i] / z;
    if (occupancy[i] / z <= 0.0) continue;
    for (std::size_t j = 0; j < d.n; ++j) out.a[i][j] = xi[i][j] / occupancy[i];
  }
  return out;
}

/// Edges of every triangle whose circumcircle has no point strictly inside,
/// by checking all triples against all points. Points must be in general
/// position.
inline std::set<IndexEdge> brute_delaunay_edges(const std::vector<Vec2>& pts) {
  using L = long double;
  auto orient = [&](std::size_t a, std::size_t b, std::size_t c) {
    return (L(pts[b].x) - pts[a].x) * (L(pts[c].y) - pts[a].y) - (L(pts[b].y) - pts[a].y) * (L(pts[c].x) - pts[a].x);
  };
  auto in_circle = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    const L adx = L(pts[a].x) - pts[d].x, ady = L(pts[a].y) - pts[d].y;
    const L bdx = L(pts[b].x) - pts[d].x, bdy = L(pts[b].y) - pts[d].y;
    const L cdx = L(pts[c].x) - pts[d].x, cdy = L(pts[c].y) - pts[d].y;
    const L det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady) +
                  (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
    return orient(a, b, c) > 0 ? det > 0 : det < 0;
  };
  const std::size_t n = pts.size();
  std::set<IndexEdge> out;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t c = b + 1; c < n; ++c) {
        if (orient(a, b, c) == 0) continue;
        bool empty = true;
        for (std::size_t d = 0; d < n && empty; ++d) {
          if (d != a && d != b && d != c && in_circle(a, b, c, d)) empty = false;
        }
        if (!empty) continue;
        out.insert({a, b});
        out.insert({a, c});
        out.insert({b, c});
      }
    }
  }
  return out;
}

/// Random points on a 1 mm lattice, so the library's coordinate snapping is
/// exact.
inline std::vector<Vec2> random_lattice_points(std::mt19937_64& rng, std::size_t count, double extent) {
  std::vector<Vec2> out;
  const auto steps = static_cast<long long>(extent * 1000.0);
  std::uniform_int_distribution<long long> u(0, steps);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back({static_cast<double>(u(rng)) / 1000.0, static_cast<double>(u(rng)) / 1000.0});
  }
  return out;
}

}  // namespace pedghmm::testing
