#pragma once

// Independent reference implementations used to check the library. None of
// these call into the code under test beyond reading graph structure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "kpsec/netmodel.hpp"
#include "kpsec/paths.hpp"

namespace oracle {

using kpsec::NodeId;

inline std::uint64_t modexp(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
  std::uint64_t result = 1 % mod;
  base %= mod;
  while (exp) {
    if (exp & 1) result = result * base % mod;
    base = base * base % mod;
    exp >>= 1;
  }
  return result;
}

// Unit-weight Dijkstra over an explicit adjacency predicate.
inline std::vector<int> dijkstra_hops(std::size_t n, NodeId s,
                                      const std::function<bool(NodeId, NodeId)>& edge) {
  std::vector<int> dist(n, std::numeric_limits<int>::max());
  using Item = std::pair<int, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[s] = 0;
  pq.push({0, s});
  while (!pq.empty()) {
    auto [du, u] = pq.top();
    pq.pop();
    if (du != dist[u]) continue;
    for (NodeId v = 0; v < n; ++v) {
      if (v == u || !edge(u, v)) continue;
      if (du + 1 < dist[v]) {
        dist[v] = du + 1;
        pq.push({dist[v], v});
      }
    }
  }
  for (auto& d : dist) {
    if (d == std::numeric_limits<int>::max()) d = -1;
  }
  return dist;
}

// Every simple directed s -> d path, by depth-first enumeration.
inline std::vector<std::vector<NodeId>> all_simple_paths(std::size_t n,
                                                         const std::vector<std::vector<bool>>& adj,
                                                         NodeId s, NodeId d) {
  std::vector<std::vector<NodeId>> out;
  std::vector<NodeId> stack{s};
  std::vector<bool> on(n, false);
  on[s] = true;
  std::function<void(NodeId)> dfs = [&](NodeId u) {
    for (NodeId v = 0; v < n; ++v) {
      if (!adj[u][v] || on[v]) continue;
      stack.push_back(v);
      if (v == d) {
        out.push_back(stack);
      } else {
        on[v] = true;
        dfs(v);
        on[v] = false;
      }
      stack.pop_back();
    }
  };
  dfs(s);
  return out;
}

// Largest family of internally vertex-disjoint simple paths, by exhaustive
// search over the enumerated paths.
inline std::size_t brute_force_disjoint(std::size_t n, const std::vector<std::vector<bool>>& adj,
                                        NodeId s, NodeId d) {
  const auto paths = all_simple_paths(n, adj, s, d);
  std::vector<std::uint32_t> masks;
  for (const auto& p : paths) {
    std::uint32_t m = 0;
    for (std::size_t i = 1; i + 1 < p.size(); ++i) m |= 1u << p[i];
    masks.push_back(m);
  }
  std::size_t best = 0;
  std::function<void(std::size_t, std::uint32_t, std::size_t)> go = [&](std::size_t i,
                                                                       std::uint32_t used,
                                                                       std::size_t count) {
    best = std::max(best, count);
    if (count + (masks.size() - i) <= best) return;
    for (std::size_t j = i; j < masks.size(); ++j) {
      if ((masks[j] & used) == 0) go(j + 1, used | masks[j], count + 1);
    }
  };
  go(0, 0, 0);
  return best;
}

// Menger: 1 for a direct arc plus the minimum number of intermediate vertices
// whose removal disconnects s from d in the remaining graph.
inline std::size_t min_vertex_cut(std::size_t n, const std::vector<std::vector<bool>>& adj, NodeId s,
                                  NodeId d) {
  std::vector<NodeId> mids;
  for (NodeId v = 0; v < n; ++v) {
    if (v != s && v != d) mids.push_back(v);
  }
  auto reachable = [&](std::uint32_t removed) {
    std::vector<bool> seen(n, false);
    std::vector<NodeId> q{s};
    seen[s] = true;
    while (!q.empty()) {
      const NodeId u = q.back();
      q.pop_back();
      for (NodeId v = 0; v < n; ++v) {
        if (!adj[u][v] || seen[v] || (removed >> v & 1u)) continue;
        if (u == s && v == d) continue;
        if (v == d) return true;
        seen[v] = true;
        q.push_back(v);
      }
    }
    return false;
  };
  std::size_t best = mids.size();
  for (std::uint32_t mask = 0; mask < (1u << mids.size()); ++mask) {
    std::uint32_t removed = 0;
    std::size_t size = 0;
    for (std::size_t i = 0; i < mids.size(); ++i) {
      if (mask >> i & 1u) {
        removed |= 1u << mids[i];
        ++size;
      }
    }
    if (size < best && !reachable(removed)) best = size;
  }
  return best + (adj[s][d] ? 1 : 0);
}

inline bool internally_disjoint(const std::vector<kpsec::Path>& paths) {
  std::set<NodeId> seen;
  for (const auto& p : paths) {
    for (auto v : p.intermediates()) {
      if (!seen.insert(v).second) return false;
    }
  }
  return true;
}

// Upper quantile of chi-square via the Wilson-Hilferty approximation.
inline double chi_square_quantile(double df, double z) {
  const double a = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace oracle
