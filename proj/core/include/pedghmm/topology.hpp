#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "pedghmm/cost_map.hpp"
#include "pedghmm/geometry.hpp"

namespace pedghmm {

using NodeId = std::uint32_t;

struct TopoNode {
  NodeId id = 0;
  Vec2 centroid;
  std::uint64_t hit_count = 0;
  /// Longest run of consecutive observations won by this node, in timesteps.
  std::uint64_t dwell_accumulator = 0;
  /// Pinned nodes (destinations, goals) never move and are never removed.
  bool pinned = false;

  friend bool operator==(const TopoNode&, const TopoNode&) = default;
};

/// Unordered node pair stored as (lo, hi).
struct TopoEdge {
  NodeId lo = 0;
  NodeId hi = 0;

  TopoEdge() = default;
  TopoEdge(NodeId a, NodeId b) : lo(a < b ? a : b), hi(a < b ? b : a) {}
  friend auto operator<=>(const TopoEdge&, const TopoEdge&) = default;
};

struct NodeMove {
  NodeId id = 0;
  Vec2 from;
  Vec2 to;
  friend bool operator==(const NodeMove&, const NodeMove&) = default;
};

/// Per-node counters and the winner run-length tracker after an update.
struct NodeStats {
  NodeId id = 0;
  std::uint64_t hit_count = 0;
  std::uint64_t dwell_accumulator = 0;
  friend bool operator==(const NodeStats&, const NodeStats&) = default;
};

/// Net change produced by one topology update. Applying it to the map at
/// `base_revision` reproduces the post-update map exactly. Application order:
/// moves, edge removals, node removals, node additions, edge additions, stats.
struct TopologyDelta {
  std::uint64_t base_revision = 0;
  std::vector<TopoNode> nodes_added;
  std::vector<NodeId> nodes_removed;
  std::vector<TopoEdge> edges_added;
  std::vector<TopoEdge> edges_removed;
  std::vector<NodeMove> nodes_moved;
  std::vector<NodeStats> stats;
  NodeId next_id = 0;
  /// Winner run tracker state after the update.
  NodeId run_node = 0;
  std::uint64_t run_length = 0;

  bool structurally_empty() const {
    return nodes_added.empty() && nodes_removed.empty() && edges_added.empty() && edges_removed.empty() &&
           nodes_moved.empty();
  }
  friend bool operator==(const TopologyDelta&, const TopologyDelta&) = default;
};

/// Instantaneous topological map: node centroids with undirected edges.
class TopologicalMap {
 public:
  /// Full serializable state.
  struct Snapshot {
    Rect bounds;
    double tau = 1.0;
    double epsilon_itm = 0.05;
    std::vector<TopoNode> nodes;
    std::vector<TopoEdge> edges;
    NodeId next_id = 0;
    std::uint64_t revision = 0;
    NodeId run_node = 0;
    std::uint64_t run_length = 0;
  };

  TopologicalMap() = default;
  TopologicalMap(Rect bounds, double tau, double epsilon_itm);

  /// Throws InvariantError on inconsistent snapshots.
  static TopologicalMap restore(const Snapshot& snap);
  Snapshot snapshot() const;

  const Rect& bounds() const { return bounds_; }
  double tau() const { return tau_; }
  double epsilon_itm() const { return epsilon_itm_; }
  std::uint64_t revision() const { return revision_; }
  NodeId next_id() const { return next_id_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const;
  bool empty() const { return nodes_.empty(); }

  const std::map<NodeId, TopoNode>& nodes() const { return nodes_; }
  const TopoNode& node(NodeId id) const;
  bool has_node(NodeId id) const { return nodes_.contains(id); }
  const std::set<NodeId>& neighbors(NodeId id) const;
  bool has_edge(NodeId a, NodeId b) const;
  std::vector<TopoEdge> edges() const;

  NodeId add_node(Vec2 centroid, bool pinned = false);
  void add_edge(NodeId a, NodeId b);
  /// Does not change the revision: pinning is not a structural change.
  void set_pinned(NodeId id, bool pinned = true);

  /// Restarts the consecutive-winner tracker; call at each new trajectory.
  void begin_track();
  NodeId run_node() const { return run_node_; }
  std::uint64_t run_length() const { return run_length_; }

  /// Structural equality ignoring the id counter and revision.
  bool same_structure(const TopologicalMap& other) const;
  friend bool operator==(const TopologicalMap&, const TopologicalMap&) = default;

  friend TopologyDelta itm_update(TopologicalMap& map, Vec2 observation);
  friend void apply_delta(TopologicalMap& map, const TopologyDelta& delta);

 private:
  void remove_edge(NodeId a, NodeId b);
  void remove_node(NodeId id);

  Rect bounds_;
  double tau_ = 1.0;
  double epsilon_itm_ = 0.05;
  std::map<NodeId, TopoNode> nodes_;
  std::map<NodeId, std::set<NodeId>> adjacency_;
  NodeId next_id_ = 0;
  std::uint64_t revision_ = 0;
  NodeId run_node_ = 0;
  std::uint64_t run_length_ = 0;
};

/// Grid of spacing tau over the map extent (boundaries included) plus the
/// destinations, which replace grid points closer than tau/2 and are pinned.
/// Destinations closer than tau/2 to an earlier destination are dropped.
/// Edges are the Delaunay edges of the resulting centroids.
TopologicalMap build_prior_topology(const PotentialCostMap& map, std::span<const Vec2> destinations, double tau,
                                    double epsilon_itm = 0.05);

/// One ITM step: match the nearest node b and second-nearest s, move b
/// toward the observation, connect b-s and drop edges b-m for which s lies
/// inside the Thales circle over b-m, insert a node at the observation when it
/// is more than tau from b and outside the Thales circle over b-s, and remove
/// non-pinned nodes left edgeless or within tau/2 of the moved b. Mutates
/// `map` and returns the net delta.
TopologyDelta itm_update(TopologicalMap& map, Vec2 observation);

/// Replays a delta. Throws StaleDeltaError when the delta was not produced
/// against this map state.
void apply_delta(TopologicalMap& map, const TopologyDelta& delta);

/// `node id x y` and `edge i j` lines.
void write_topology(const TopologicalMap& map, std::ostream& out);
void export_topology(const TopologicalMap& map, const std::filesystem::path& path);

}  // namespace pedghmm
