#include "kpsec/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace kpsec {
namespace {

// Positions are quantized to micrometers so that the 6-digit text format
// reproduces them exactly.
double quantize(double v) { return std::round(v * 1e6) / 1e6; }

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

PhysicalTopology::PhysicalTopology(std::vector<Point> positions, double range)
    : positions_(std::move(positions)), range_(range), adjacency_(positions_.size()) {
  const double r2 = range * range;
  const auto n = static_cast<NodeId>(positions_.size());
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double dx = positions_[u].x - positions_[v].x;
      const double dy = positions_[u].y - positions_[v].y;
      if (dx * dx + dy * dy <= r2) {
        adjacency_[u].push_back(v);
        adjacency_[v].push_back(u);
        ++edge_count_;
      }
    }
  }
  // Both endpoints are appended in increasing order of the other id, so the
  // lists are already sorted.
}

bool PhysicalTopology::adjacent(NodeId u, NodeId v) const {
  const auto& a = adjacency_[u];
  return std::binary_search(a.begin(), a.end(), v);
}

void OverlayGraph::add_edge(NodeId u, NodeId v) {
  if (u == v) return;
  auto& out = out_[u];
  auto it = std::lower_bound(out.begin(), out.end(), v);
  if (it != out.end() && *it == v) return;
  out.insert(it, v);
  auto& in = in_[v];
  in.insert(std::lower_bound(in.begin(), in.end(), u), u);
  ++edge_count_;
}

bool OverlayGraph::has_edge(NodeId u, NodeId v) const {
  const auto& out = out_[u];
  return std::binary_search(out.begin(), out.end(), v);
}

void NetworkParams::validate() const {
  if (n < 2) throw std::invalid_argument("n must be at least 2");
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (!(side > 0.0)) throw std::invalid_argument("side must be positive");
  if (!(range > 0.0)) throw std::invalid_argument("range must be positive");
}

PhysicalTopology generate_topology(std::size_t n, double side, double range, Seed seed) {
  if (n < 2) throw std::invalid_argument("n must be at least 2");
  if (!(side > 0.0) || !(range > 0.0)) {
    throw std::invalid_argument("side and range must be positive");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> coord(0.0, side);
  std::vector<Point> pos(n);
  for (auto& p : pos) {
    p.x = quantize(coord(rng));
    p.y = quantize(coord(rng));
  }
  return PhysicalTopology(std::move(pos), range);
}

std::vector<Keyring> assign_keyrings(std::size_t n, std::size_t k, Seed seed) {
  if (n < 2) throw std::invalid_argument("n must be at least 2");
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  Rng rng(seed);
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
  std::vector<Keyring> rings(n);
  for (NodeId v = 0; v < n; ++v) {
    rings[v].owner = v;
    rings[v].known.resize(k);
    for (auto& key : rings[v].known) key = pick(rng);
  }
  return rings;
}

OverlayGraph build_overlay(std::span<const Keyring> keyrings) {
  OverlayGraph g(keyrings.size());
  for (const auto& ring : keyrings) {
    for (NodeId v : ring.known) {
      if (v >= keyrings.size()) throw std::out_of_range("keyring refers to unknown node");
      g.add_edge(ring.owner, v);
    }
  }
  return g;
}

Network generate_network(const NetworkParams& params) {
  params.validate();
  Network net;
  net.params = params;
  net.topology = generate_topology(params.n, params.side, params.range,
                                   derive_seed(params.seed, "topology"));
  net.keyrings = assign_keyrings(params.n, params.k, derive_seed(params.seed, "keyrings"));
  net.overlay = build_overlay(net.keyrings);
  return net;
}

void write_network(std::ostream& os, const Network& net) {
  const auto& p = net.params;
  os << p.n << ' ' << p.k << ' ' << fixed6(p.side) << ' ' << fixed6(p.range) << ' ' << p.seed
     << '\n';
  const auto pos = net.topology.positions();
  for (NodeId v = 0; v < p.n; ++v) {
    os << v << ' ' << fixed6(pos[v].x) << ' ' << fixed6(pos[v].y);
    for (NodeId key : net.keyrings[v].known) os << ' ' << key;
    os << '\n';
  }
}

Network read_network(std::istream& is) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  };
  if (!next_line()) throw FormatError("missing header line");
  Network net;
  {
    std::istringstream hs(line);
    if (!(hs >> net.params.n >> net.params.k >> net.params.side >> net.params.range >>
          net.params.seed)) {
      throw FormatError("malformed header: expected 'n k side range seed'");
    }
  }
  try {
    net.params.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid header: ") + e.what());
  }
  const std::size_t n = net.params.n;
  std::vector<Point> pos(n);
  std::vector<bool> seen(n, false);
  net.keyrings.resize(n);
  for (std::size_t row = 0; row < n; ++row) {
    if (!next_line()) throw FormatError("expected " + std::to_string(n) + " node lines");
    std::istringstream ls(line);
    NodeId id = 0;
    Point p;
    if (!(ls >> id >> p.x >> p.y) || id >= n || seen[id]) {
      throw FormatError("malformed node line: " + line);
    }
    seen[id] = true;
    pos[id] = p;
    auto& ring = net.keyrings[id];
    ring.owner = id;
    ring.known.resize(net.params.k);
    for (auto& key : ring.known) {
      if (!(ls >> key) || key >= n) throw FormatError("bad keyring entry on line: " + line);
    }
    std::string extra;
    if (ls >> extra) throw FormatError("too many keyring entries on line: " + line);
  }
  net.topology = PhysicalTopology(std::move(pos), net.params.range);
  net.overlay = build_overlay(net.keyrings);
  return net;
}

}  // namespace kpsec
