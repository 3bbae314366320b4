#include "kpsec/paths.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <ostream>
#include <stdexcept>

namespace kpsec {

std::vector<int> physical_distances(const PhysicalTopology& topo, NodeId s) {
  std::vector<int> dist(topo.size(), -1);
  std::deque<NodeId> queue{s};
  dist[s] = 0;
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : topo.neighbors(u)) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::optional<Path> shortest_physical_path(const PhysicalTopology& topo, NodeId s, NodeId d) {
  if (s == d) throw std::invalid_argument("shortest_physical_path: s == d");
  // Distances to d, then walk greedily from s choosing the smallest-id
  // neighbor that is one hop closer.
  const auto dist = physical_distances(topo, d);
  if (dist[s] < 0) return std::nullopt;
  Path path{{s}, Layer::physical};
  NodeId cur = s;
  while (cur != d) {
    for (NodeId v : topo.neighbors(cur)) {
      if (dist[v] == dist[cur] - 1) {
        cur = v;
        break;
      }
    }
    path.nodes.push_back(cur);
  }
  return path;
}

std::size_t physical_diameter(const PhysicalTopology& topo) {
  int best = 0;
  for (NodeId s = 0; s < topo.size(); ++s) {
    for (int d : physical_distances(topo, s)) best = std::max(best, d);
  }
  return static_cast<std::size_t>(best);
}

FlowNetwork::FlowNetwork(std::size_t original_vertices, std::uint32_t source, std::uint32_t sink)
    : adjacency_(2 * original_vertices), source_(source), sink_(sink) {}

void FlowNetwork::add_arc(std::uint32_t from, std::uint32_t to, int capacity) {
  const auto idx = static_cast<std::int64_t>(arcs_.size());
  arcs_.push_back({from, to, capacity, 0});
  adjacency_[from].push_back(idx);
  adjacency_[to].push_back(~idx);
  sorted_ = false;
}

void FlowNetwork::sort_adjacency() {
  auto head = [this](std::int64_t e) {
    return e >= 0 ? arcs_[e].to : arcs_[~e].from;
  };
  for (auto& list : adjacency_) {
    std::sort(list.begin(), list.end(), [&](std::int64_t a, std::int64_t b) {
      const auto ha = head(a), hb = head(b);
      if (ha != hb) return ha < hb;
      return a > b;  // forward arcs (non-negative) before reverse arcs
    });
  }
  sorted_ = true;
}

std::size_t FlowNetwork::max_flow(std::optional<std::size_t> limit) {
  if (!sorted_) sort_adjacency();
  const std::size_t nv = adjacency_.size();
  std::vector<std::int64_t> via(nv);
  std::vector<char> seen(nv);
  std::size_t augmented = 0;
  while (!limit || augmented < *limit) {
    std::fill(seen.begin(), seen.end(), 0);
    std::deque<std::uint32_t> queue{source_};
    seen[source_] = 1;
    while (!queue.empty() && !seen[sink_]) {
      const auto u = queue.front();
      queue.pop_front();
      for (const auto e : adjacency_[u]) {
        const bool forward = e >= 0;
        const Arc& a = forward ? arcs_[e] : arcs_[~e];
        const std::uint32_t v = forward ? a.to : a.from;
        const bool residual = forward ? a.flow < a.capacity : a.flow > 0;
        if (!residual || seen[v]) continue;
        seen[v] = 1;
        via[v] = e;
        if (v == sink_) break;
        queue.push_back(v);
      }
    }
    if (!seen[sink_]) break;
    for (std::uint32_t v = sink_; v != source_;) {
      const auto e = via[v];
      if (e >= 0) {
        ++arcs_[e].flow;
        v = arcs_[e].from;
      } else {
        --arcs_[~e].flow;
        v = arcs_[~e].to;
      }
    }
    ++augmented;
    ++flow_value_;
  }
  return flow_value_;
}

FlowNetwork split_vertices(const OverlayGraph& g, NodeId s, NodeId d) {
  if (s == d) throw std::invalid_argument("split_vertices: s == d");
  const auto n = static_cast<NodeId>(g.size());
  FlowNetwork net(n, FlowNetwork::out_vertex(s), FlowNetwork::in_vertex(d));
  for (NodeId v = 0; v < n; ++v) {
    net.add_arc(FlowNetwork::in_vertex(v), FlowNetwork::out_vertex(v));
  }
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v : g.successors(u)) {
      net.add_arc(FlowNetwork::out_vertex(u), FlowNetwork::in_vertex(v));
    }
  }
  return net;
}

std::vector<Path> max_vertex_disjoint_paths(const OverlayGraph& g, NodeId s, NodeId d,
                                            std::optional<std::size_t> limit) {
  auto net = split_vertices(g, s, d);
  const std::size_t value = net.max_flow(limit);

  // Remaining flow per arc; consumed while decomposing.
  std::vector<int> remaining;
  remaining.reserve(net.arcs().size());
  for (const auto& a : net.arcs()) remaining.push_back(a.flow);

  std::vector<Path> paths;
  paths.reserve(value);
  for (std::size_t p = 0; p < value; ++p) {
    Path path{{s}, Layer::overlay};
    std::uint32_t cur = net.source();
    while (cur != net.sink()) {
      std::int64_t next = -1;
      for (const auto e : net.residual_out(cur)) {
        if (e >= 0 && remaining[e] > 0) {
          next = e;
          break;
        }
      }
      if (next < 0) throw std::logic_error("flow decomposition: conservation violated");
      --remaining[next];
      cur = net.arcs()[next].to;
      if (cur % 2 == 0) path.nodes.push_back(FlowNetwork::original(cur));
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

PathStats path_length_stats(const OverlayGraph& g,
                            std::span<const std::pair<NodeId, NodeId>> pairs,
                            std::optional<std::size_t> limit) {
  if (pairs.empty()) throw std::invalid_argument("path_length_stats: no pairs");
  PathStats stats;
  std::vector<std::size_t> length_hist;
  std::size_t total_paths = 0;
  double sum = 0.0, sum_sq = 0.0, length_sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [s, d] = pairs[i];
    PairPaths pp{i, s, d, max_vertex_disjoint_paths(g, s, d, limit)};
    if (pp.paths.empty()) {
      ++stats.skipped;
    } else {
      ++stats.evaluated;
      const auto c = static_cast<double>(pp.paths.size());
      sum += c;
      sum_sq += c * c;
      for (const auto& path : pp.paths) {
        const auto len = path.hops();
        if (length_hist.size() <= len) length_hist.resize(len + 1, 0);
        ++length_hist[len];
        length_sum += static_cast<double>(len);
        ++total_paths;
      }
    }
    stats.pairs.push_back(std::move(pp));
  }
  if (stats.evaluated > 0) {
    const auto m = static_cast<double>(stats.evaluated);
    stats.mean_count = sum / m;
    stats.stddev_count = std::sqrt(std::max(0.0, sum_sq / m - stats.mean_count * stats.mean_count));
    stats.mean_length = length_sum / static_cast<double>(total_paths);
    std::size_t acc = 0;
    for (const auto c : length_hist) {
      acc += c;
      stats.length_cdf.push_back(static_cast<double>(acc) / static_cast<double>(total_paths));
    }
  }
  return stats;
}

std::vector<std::pair<NodeId, NodeId>> random_pairs(std::size_t n, std::size_t count, Seed seed) {
  if (n < 2) throw std::invalid_argument("need at least two nodes to form a pair");
  Rng rng = make_rng(seed, "pairs");
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(count);
  while (out.size() < count) {
    const NodeId s = pick(rng), d = pick(rng);
    if (s != d) out.emplace_back(s, d);
  }
  return out;
}

void write_path_stats_csv(std::ostream& os, const PathStats& stats) {
  os << "pair_id,s,d,n_paths,lengths\n";
  for (const auto& pp : stats.pairs) {
    os << pp.pair_id << ',' << pp.source << ',' << pp.destination << ',' << pp.paths.size()
       << ',';
    for (std::size_t i = 0; i < pp.paths.size(); ++i) {
      if (i) os << ';';
      os << pp.paths[i].hops();
    }
    os << '\n';
  }
}

}  // namespace kpsec
