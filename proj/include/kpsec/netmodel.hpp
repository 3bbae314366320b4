#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "kpsec/bytes.hpp"
#include "kpsec/rng.hpp"

namespace kpsec {

using NodeId = std::uint32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Undirected unit-disk graph: u and v are adjacent iff their Euclidean
// distance is at most the communication range. Neighbor lists are sorted.
class PhysicalTopology {
 public:
  PhysicalTopology() = default;
  PhysicalTopology(std::vector<Point> positions, double range);

  std::size_t size() const { return positions_.size(); }
  double range() const { return range_; }
  std::span<const Point> positions() const { return positions_; }
  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_[v]; }
  bool adjacent(NodeId u, NodeId v) const;
  std::size_t edge_count() const { return edge_count_; }

 private:
  std::vector<Point> positions_;
  double range_ = 0.0;
  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

// Public keys a node was pre-loaded with: exactly k draws, with replacement.
struct Keyring {
  NodeId owner = 0;
  std::vector<NodeId> known;
};

// Directed key-knowledge graph: u -> v iff u holds v's public key and u != v.
class OverlayGraph {
 public:
  OverlayGraph() = default;
  explicit OverlayGraph(std::size_t n) : out_(n), in_(n) {}

  // Duplicate and self edges are ignored.
  void add_edge(NodeId u, NodeId v);

  std::size_t size() const { return out_.size(); }
  std::span<const NodeId> successors(NodeId v) const { return out_[v]; }
  std::span<const NodeId> predecessors(NodeId v) const { return in_[v]; }
  std::size_t out_degree(NodeId v) const { return out_[v].size(); }
  std::size_t in_degree(NodeId v) const { return in_[v].size(); }
  bool has_edge(NodeId u, NodeId v) const;
  std::size_t edge_count() const { return edge_count_; }

 private:
  std::vector<std::vector<NodeId>> out_;
  std::vector<std::vector<NodeId>> in_;
  std::size_t edge_count_ = 0;
};

struct NetworkParams {
  std::size_t n = 100;
  std::size_t k = 10;
  double side = 300.0;
  double range = 100.0;
  Seed seed = 1;

  void validate() const;
};

struct Network {
  NetworkParams params;
  PhysicalTopology topology;
  std::vector<Keyring> keyrings;
  OverlayGraph overlay;
};

PhysicalTopology generate_topology(std::size_t n, double side, double range, Seed seed);
std::vector<Keyring> assign_keyrings(std::size_t n, std::size_t k, Seed seed);
OverlayGraph build_overlay(std::span<const Keyring> keyrings);

// Topology and keyrings come from independent streams of params.seed.
Network generate_network(const NetworkParams& params);

// Line-oriented text format:
//   n k side range seed
//   id x y key_1 .. key_k        (one line per node)
// Real numbers carry exactly 6 fractional digits.
void write_network(std::ostream& os, const Network& net);
Network read_network(std::istream& is);

}  // namespace kpsec
