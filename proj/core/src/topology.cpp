#include "pedghmm/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "pedghmm/delaunay.hpp"
#include "pedghmm/error.hpp"
#include "pedghmm/text.hpp"

namespace pedghmm {

TopologicalMap::TopologicalMap(Rect bounds, double tau, double epsilon_itm)
    : bounds_(bounds), tau_(tau), epsilon_itm_(epsilon_itm) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("insertion threshold tau must be > 0");
  if (!(epsilon_itm >= 0.0 && epsilon_itm <= 1.0)) throw InputError("epsilon_itm must lie in [0, 1]");
}

std::size_t TopologicalMap::edge_count() const {
  std::size_t twice = 0;
  for (const auto& [id, adj] : adjacency_) twice += adj.size();
  return twice / 2;
}

const TopoNode& TopologicalMap::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw InputError("unknown node id " + std::to_string(id));
  return it->second;
}

const std::set<NodeId>& TopologicalMap::neighbors(NodeId id) const {
  auto it = adjacency_.find(id);
  if (it == adjacency_.end()) throw InputError("unknown node id " + std::to_string(id));
  return it->second;
}

bool TopologicalMap::has_edge(NodeId a, NodeId b) const {
  auto it = adjacency_.find(a);
  return it != adjacency_.end() && it->second.contains(b);
}

std::vector<TopoEdge> TopologicalMap::edges() const {
  std::vector<TopoEdge> out;
  for (const auto& [a, adj] : adjacency_) {
    for (NodeId b : adj) {
      if (a < b) out.emplace_back(a, b);
    }
  }
  return out;
}

NodeId TopologicalMap::add_node(Vec2 centroid, bool pinned) {
  if (!bounds_.contains(centroid)) throw OutOfBoundsError("node centroid outside the topology bounds");
  const NodeId id = next_id_++;
  nodes_[id] = TopoNode{id, centroid, 0, 0, pinned};
  adjacency_[id];
  ++revision_;
  return id;
}

void TopologicalMap::add_edge(NodeId a, NodeId b) {
  if (a == b) throw InvariantError("self-edge on node " + std::to_string(a));
  if (!has_node(a) || !has_node(b)) throw InputError("edge endpoint does not exist");
  adjacency_[a].insert(b);
  adjacency_[b].insert(a);
  ++revision_;
}

void TopologicalMap::set_pinned(NodeId id, bool pinned) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw InputError("unknown node id " + std::to_string(id));
  it->second.pinned = pinned;
}

TopologicalMap TopologicalMap::restore(const Snapshot& snap) {
  TopologicalMap map(snap.bounds, snap.tau, snap.epsilon_itm);
  for (const TopoNode& n : snap.nodes) {
    if (!map.bounds_.contains(n.centroid)) throw InvariantError("node centroid outside the topology bounds");
    if (n.id >= snap.next_id) throw InvariantError("node id not below the id counter");
    if (!map.nodes_.emplace(n.id, n).second) throw InvariantError("duplicate node id " + std::to_string(n.id));
    map.adjacency_[n.id];
  }
  for (const TopoEdge& e : snap.edges) {
    if (e.lo == e.hi) throw InvariantError("self-edge on node " + std::to_string(e.lo));
    if (!map.has_node(e.lo) || !map.has_node(e.hi)) throw InvariantError("edge endpoint does not exist");
    map.adjacency_[e.lo].insert(e.hi);
    map.adjacency_[e.hi].insert(e.lo);
  }
  map.next_id_ = snap.next_id;
  map.revision_ = snap.revision;
  map.run_node_ = snap.run_node;
  map.run_length_ = snap.run_length;
  return map;
}

TopologicalMap::Snapshot TopologicalMap::snapshot() const {
  Snapshot snap{bounds_, tau_, epsilon_itm_, {}, edges(), next_id_, revision_, run_node_, run_length_};
  for (const auto& [id, n] : nodes_) snap.nodes.push_back(n);
  return snap;
}

void TopologicalMap::begin_track() {
  run_node_ = 0;
  run_length_ = 0;
}

void TopologicalMap::remove_edge(NodeId a, NodeId b) {
  adjacency_[a].erase(b);
  adjacency_[b].erase(a);
}

void TopologicalMap::remove_node(NodeId id) {
  for (NodeId m : adjacency_[id]) adjacency_[m].erase(id);
  adjacency_.erase(id);
  nodes_.erase(id);
  if (run_node_ == id) begin_track();
}

bool TopologicalMap::same_structure(const TopologicalMap& other) const {
  return bounds_ == other.bounds_ && tau_ == other.tau_ && epsilon_itm_ == other.epsilon_itm_ &&
         nodes_ == other.nodes_ && adjacency_ == other.adjacency_;
}

TopologicalMap build_prior_topology(const PotentialCostMap& map, std::span<const Vec2> destinations, double tau,
                                    double epsilon_itm) {
  const Rect extent = map.extent();
  TopologicalMap topo(extent, tau, epsilon_itm);
  if (tau > extent.width() || tau > extent.height()) {
    throw InputError("insertion threshold tau exceeds the scene extent");
  }
  std::vector<Vec2> goals;
  for (const Vec2& d : destinations) {
    if (!extent.contains(d)) throw OutOfBoundsError("destination outside the cost map extent");
    const bool merged = std::any_of(goals.begin(), goals.end(), [&](Vec2 g) { return distance(g, d) < tau / 2.0; });
    if (!merged) goals.push_back(d);
  }
  const auto nx = static_cast<std::size_t>(std::floor(extent.width() / tau + 1e-9)) + 1;
  const auto ny = static_cast<std::size_t>(std::floor(extent.height() / tau + 1e-9)) + 1;
  std::vector<Vec2> points;
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const Vec2 p{extent.min.x + static_cast<double>(i) * tau, extent.min.y + static_cast<double>(j) * tau};
      const bool replaced = std::any_of(goals.begin(), goals.end(), [&](Vec2 g) { return distance(g, p) < tau / 2.0; });
      if (!replaced) points.push_back(p);
    }
  }
  const std::size_t grid_count = points.size();
  points.insert(points.end(), goals.begin(), goals.end());

  std::vector<NodeId> ids;
  ids.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) ids.push_back(topo.add_node(points[k], k >= grid_count));
  if (points.size() >= 2) {
    for (const auto& [a, b] : delaunay_edges(points)) topo.add_edge(ids[a], ids[b]);
  }
  return topo;
}

TopologyDelta itm_update(TopologicalMap& map, Vec2 observation) {
  if (map.empty()) throw InputError("itm_update on an empty topological map");
  if (!map.bounds_.contains(observation)) throw OutOfBoundsError("observation outside the topology bounds");

  TopologyDelta delta;
  delta.base_revision = map.revision_;

  // Matching: nearest and second-nearest, ties to the lower id.
  NodeId b = 0, s = 0;
  bool has_s = false;
  double db = std::numeric_limits<double>::infinity();
  double ds = db;
  for (const auto& [id, n] : map.nodes_) {
    const double d = squared_distance(n.centroid, observation);
    if (d < db) {
      if (db < std::numeric_limits<double>::infinity()) {
        s = b;
        ds = db;
        has_s = true;
      }
      b = id;
      db = d;
    } else if (d < ds) {
      s = id;
      ds = d;
      has_s = true;
    }
  }

  std::set<TopoEdge> added, removed;
  auto note_add = [&](TopoEdge e) {
    if (removed.erase(e) == 0) added.insert(e);
  };
  auto note_remove = [&](TopoEdge e) {
    if (added.erase(e) == 0) removed.insert(e);
  };

  const double half_tau2 = (map.tau_ / 2.0) * (map.tau_ / 2.0);
  TopoNode& winner = map.nodes_.at(b);

  // Adaptation; nodes crowded by the moved winner are removed below.
  std::vector<NodeId> crowded;
  if (!winner.pinned) {
    const Vec2 target = winner.centroid + map.epsilon_itm_ * (observation - winner.centroid);
    if (target != winner.centroid) {
      bool blocked = false;
      for (const auto& [id, n] : map.nodes_) {
        if (id == b || squared_distance(target, n.centroid) >= half_tau2) continue;
        if (n.pinned) blocked = true;
        crowded.push_back(id);
      }
      if (blocked) {
        crowded.clear();
      } else {
        delta.nodes_moved.push_back({b, winner.centroid, target});
        winner.centroid = target;
      }
    }
  }

  // Edge update.
  std::set<NodeId> lost_edge;
  if (has_s) {
    if (!map.has_edge(b, s)) {
      map.adjacency_[b].insert(s);
      map.adjacency_[s].insert(b);
      note_add({b, s});
    }
    const Vec2 wb = winner.centroid;
    const Vec2 ws = map.nodes_.at(s).centroid;
    const std::vector<NodeId> adj(map.adjacency_[b].begin(), map.adjacency_[b].end());
    for (NodeId m : adj) {
      if (m == s) continue;
      if (dot(wb - ws, map.nodes_.at(m).centroid - ws) < 0.0) {
        map.remove_edge(b, m);
        note_remove({b, m});
        lost_edge.insert(m);
      }
    }
  }

  // Insertion.
  const bool outside_thales = !has_s || dot(winner.centroid - observation, map.nodes_.at(s).centroid - observation) > 0.0;
  if (outside_thales && distance(observation, winner.centroid) > map.tau_) {
    const NodeId y = map.next_id_++;
    map.nodes_[y] = TopoNode{y, observation, 0, 0, false};
    map.adjacency_[y].insert(b);
    map.adjacency_[b].insert(y);
    delta.nodes_added.push_back(map.nodes_[y]);
    note_add({b, y});
  }

  // Removal.
  for (NodeId m : crowded) {
    const std::vector<NodeId> adj(map.adjacency_[m].begin(), map.adjacency_[m].end());
    for (NodeId k : adj) {
      map.remove_edge(m, k);
      note_remove({m, k});
      lost_edge.insert(k);
    }
    map.remove_node(m);
    delta.nodes_removed.push_back(m);
  }
  for (NodeId m : lost_edge) {
    if (m == b || !map.has_node(m)) continue;
    if (map.nodes_.at(m).pinned || !map.adjacency_[m].empty()) continue;
    map.remove_node(m);
    delta.nodes_removed.push_back(m);
  }

  // Counters and dwell tracking.
  TopoNode& w = map.nodes_.at(b);
  ++w.hit_count;
  if (map.run_length_ > 0 && map.run_node_ == b) {
    ++map.run_length_;
  } else {
    map.run_node_ = b;
    map.run_length_ = 1;
  }
  w.dwell_accumulator = std::max(w.dwell_accumulator, map.run_length_);

  delta.edges_added.assign(added.begin(), added.end());
  delta.edges_removed.assign(removed.begin(), removed.end());
  delta.stats.push_back({b, w.hit_count, w.dwell_accumulator});
  delta.next_id = map.next_id_;
  delta.run_node = map.run_node_;
  delta.run_length = map.run_length_;
  ++map.revision_;
  return delta;
}

void apply_delta(TopologicalMap& target, const TopologyDelta& delta) {
  if (delta.base_revision != target.revision_) {
    throw StaleDeltaError("delta built against revision " + std::to_string(delta.base_revision) +
                          ", map is at revision " + std::to_string(target.revision_));
  }
  TopologicalMap map = target;
  for (const NodeMove& mv : delta.nodes_moved) {
    auto it = map.nodes_.find(mv.id);
    if (it == map.nodes_.end() || it->second.centroid != mv.from) {
      throw StaleDeltaError("moved node " + std::to_string(mv.id) + " does not match");
    }
    it->second.centroid = mv.to;
  }
  for (const TopoEdge& e : delta.edges_removed) {
    if (!map.has_edge(e.lo, e.hi)) throw StaleDeltaError("removed edge does not exist");
    map.remove_edge(e.lo, e.hi);
  }
  for (NodeId id : delta.nodes_removed) {
    if (!map.has_node(id)) throw StaleDeltaError("removed node " + std::to_string(id) + " does not exist");
    if (!map.adjacency_[id].empty()) throw StaleDeltaError("removed node " + std::to_string(id) + " still has edges");
    map.remove_node(id);
  }
  for (const TopoNode& n : delta.nodes_added) {
    if (map.has_node(n.id)) throw StaleDeltaError("added node " + std::to_string(n.id) + " already exists");
    if (!map.bounds_.contains(n.centroid)) throw StaleDeltaError("added node outside bounds");
    map.nodes_[n.id] = n;
    map.adjacency_[n.id];
  }
  for (const TopoEdge& e : delta.edges_added) {
    if (e.lo == e.hi || !map.has_node(e.lo) || !map.has_node(e.hi) || map.has_edge(e.lo, e.hi)) {
      throw StaleDeltaError("added edge does not fit the map");
    }
    map.adjacency_[e.lo].insert(e.hi);
    map.adjacency_[e.hi].insert(e.lo);
  }
  for (const NodeStats& st : delta.stats) {
    auto it = map.nodes_.find(st.id);
    if (it == map.nodes_.end()) throw StaleDeltaError("stats for unknown node " + std::to_string(st.id));
    it->second.hit_count = st.hit_count;
    it->second.dwell_accumulator = st.dwell_accumulator;
  }
  map.next_id_ = std::max(map.next_id_, delta.next_id);
  map.run_node_ = delta.run_node;
  map.run_length_ = delta.run_length;
  map.revision_ = delta.base_revision + 1;
  target = std::move(map);
}

void write_topology(const TopologicalMap& map, std::ostream& out) {
  for (const auto& [id, n] : map.nodes()) {
    out << "node " << id << ' ' << text::format_double(n.centroid.x) << ' ' << text::format_double(n.centroid.y) << '\n';
  }
  for (const TopoEdge& e : map.edges()) out << "edge " << e.lo << ' ' << e.hi << '\n';
}

void export_topology(const TopologicalMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_topology(map, out);
}

}  // namespace pedghmm
