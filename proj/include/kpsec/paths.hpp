#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "kpsec/netmodel.hpp"
#include "kpsec/rng.hpp"

namespace kpsec {

enum class Layer { physical, overlay };

struct Path {
  std::vector<NodeId> nodes;
  Layer layer = Layer::overlay;

  std::size_t hops() const { return nodes.empty() ? 0 : nodes.size() - 1; }
  // Nodes strictly between the endpoints.
  std::span<const NodeId> intermediates() const {
    if (nodes.size() < 2) return {};
    return std::span<const NodeId>(nodes).subspan(1, nodes.size() - 2);
  }
  bool operator==(const Path&) const = default;
};

// Minimum-hop route by BFS; among equal-length routes the one whose next hops
// have the smallest ids wins. Returns nullopt if d is unreachable.
std::optional<Path> shortest_physical_path(const PhysicalTopology& topo, NodeId s, NodeId d);

// Hop distance from s to every node (-1 when unreachable).
std::vector<int> physical_distances(const PhysicalTopology& topo, NodeId s);

// Largest finite hop distance over all pairs.
std::size_t physical_diameter(const PhysicalTopology& topo);

// Unit-capacity flow network obtained by splitting each overlay vertex v into
// v_in = 2v and v_out = 2v + 1 joined by an internal arc. Overlay arc u -> v
// becomes u_out -> v_in. Flow runs from s_out to d_in so only intermediate
// vertices are capacity constrained.
class FlowNetwork {
 public:
  struct Arc {
    std::uint32_t from = 0;
    std::uint32_t to = 0;
    int capacity = 1;
    int flow = 0;
  };

  static constexpr std::uint32_t in_vertex(NodeId v) { return 2 * v; }
  static constexpr std::uint32_t out_vertex(NodeId v) { return 2 * v + 1; }
  static constexpr NodeId original(std::uint32_t split) { return split / 2; }

  FlowNetwork(std::size_t original_vertices, std::uint32_t source, std::uint32_t sink);

  void add_arc(std::uint32_t from, std::uint32_t to, int capacity = 1);

  std::size_t vertex_count() const { return adjacency_.size(); }
  std::span<const Arc> arcs() const { return arcs_; }
  std::uint32_t source() const { return source_; }
  std::uint32_t sink() const { return sink_; }

  // Edmonds-Karp: breadth-first augmenting paths, residual arcs explored in
  // increasing head-vertex order. Stops after `limit` augmentations when given.
  // Returns the total flow value (cumulative over calls).
  std::size_t max_flow(std::optional<std::size_t> limit = std::nullopt);

  std::size_t flow_value() const { return flow_value_; }

  // Arc indices leaving `v` in the residual graph, including reverse arcs.
  // Reverse arcs are encoded as ~index.
  std::span<const std::int64_t> residual_out(std::uint32_t v) const { return adjacency_[v]; }

 private:
  void sort_adjacency();

  std::vector<Arc> arcs_;
  std::vector<std::vector<std::int64_t>> adjacency_;
  std::uint32_t source_;
  std::uint32_t sink_;
  std::size_t flow_value_ = 0;
  bool sorted_ = false;
};

FlowNetwork split_vertices(const OverlayGraph& g, NodeId s, NodeId d);

// Maximum set of internally vertex-disjoint directed s -> d overlay paths,
// recovered by flow decomposition (lowest-id arcs first). With `limit`, at
// most that many augmentations are performed.
std::vector<Path> max_vertex_disjoint_paths(const OverlayGraph& g, NodeId s, NodeId d,
                                            std::optional<std::size_t> limit = std::nullopt);

struct PairPaths {
  std::size_t pair_id = 0;
  NodeId source = 0;
  NodeId destination = 0;
  std::vector<Path> paths;
};

struct PathStats {
  std::vector<PairPaths> pairs;     // every requested pair, reachable or not
  std::size_t evaluated = 0;        // pairs with at least one path
  std::size_t skipped = 0;          // pairs with no path
  double mean_count = 0.0;
  double stddev_count = 0.0;
  double mean_length = 0.0;
  // length_cdf[L] = fraction of paths with overlay length <= L.
  std::vector<double> length_cdf;
};

PathStats path_length_stats(const OverlayGraph& g,
                            std::span<const std::pair<NodeId, NodeId>> pairs,
                            std::optional<std::size_t> limit = std::nullopt);

// `count` ordered pairs of distinct nodes drawn uniformly (with replacement).
std::vector<std::pair<NodeId, NodeId>> random_pairs(std::size_t n, std::size_t count, Seed seed);

// CSV body: pair_id,s,d,n_paths,lengths (lengths as a semicolon list).
// Unreachable pairs appear with n_paths = 0 and an empty length list.
void write_path_stats_csv(std::ostream& os, const PathStats& stats);

}  // namespace kpsec
