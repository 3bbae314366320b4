#include "kpsec/protocol.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <utility>

namespace kpsec::protocol {

KeyDirectory::KeyDirectory(const crypto::Group& group, std::size_t n, Seed seed) : group_(&group) {
  keys_.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    keys_.push_back(crypto::keygen(group, derive_seed(seed, "node-key", v)));
  }
}

std::vector<Path> select_disjoint_paths(const OverlayGraph& g, NodeId s, NodeId d, std::size_t rho,
                                        PathSelection selection) {
  if (selection == PathSelection::shortest_augmenting) {
    return max_vertex_disjoint_paths(g, s, d, rho);
  }
  auto paths = max_vertex_disjoint_paths(g, s, d);
  if (paths.size() > rho) paths.resize(rho);
  return paths;
}

void SessionConfig::validate(const Network& net) const {
  const auto n = net.params.n;
  if (source >= n || destination >= n) throw std::invalid_argument("session endpoint out of range");
  if (source == destination) throw std::invalid_argument("source and destination must differ");
  if (theta < 1) throw std::invalid_argument("theta must be at least 1");
  if (theta > rho) throw std::invalid_argument("theta must not exceed rho");
  if (rho > net.params.k) throw std::invalid_argument("rho must not exceed k");
  if (payload.empty()) throw std::invalid_argument("payload must not be empty");
}

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::none: return "none";
    case FailureReason::insufficient_disjoint_paths: return "insufficient-disjoint-paths";
    case FailureReason::physical_unreachable: return "physical-unreachable";
    case FailureReason::insufficient_shares: return "insufficient-shares";
    case FailureReason::attack_detected: return "attack-detected";
    case FailureReason::conflicting_keys: return "conflicting-keys";
    case FailureReason::reply_undecryptable: return "reply-undecryptable";
    case FailureReason::data_decrypt_failed: return "data-decrypt-failed";
  }
  return "unknown";
}

std::size_t Message::wire_size() const {
  std::size_t size = 1 + 4 + 1 + 1 + 1 + 4 * envelope.overlay_route.size() + payload.size();
  if (kind == MessageKind::data) size += nonce.size();
  return size;
}

PathPlan plan_paths(const Network& net, NodeId s, NodeId d, std::size_t rho,
                    PathSelection selection) {
  PathPlan plan;
  plan.overlay = select_disjoint_paths(net.overlay, s, d, rho, selection);
  if (plan.overlay.size() < rho) {
    throw PlanError(FailureReason::insufficient_disjoint_paths,
                    "only " + std::to_string(plan.overlay.size()) + " disjoint overlay paths");
  }
  for (const auto& path : plan.overlay) {
    std::vector<Path> routes;
    for (std::size_t h = 0; h + 1 < path.nodes.size(); ++h) {
      auto route = shortest_physical_path(net.topology, path.nodes[h], path.nodes[h + 1]);
      if (!route) {
        throw PlanError(FailureReason::physical_unreachable, "overlay hop has no physical route");
      }
      routes.push_back(std::move(*route));
    }
    plan.hop_routes.push_back(std::move(routes));
  }
  auto data = shortest_physical_path(net.topology, s, d);
  if (!data) throw PlanError(FailureReason::physical_unreachable, "no physical source-destination path");
  plan.data_path = *data;
  plan.reply_path = *data;
  std::reverse(plan.reply_path.nodes.begin(), plan.reply_path.nodes.end());
  return plan;
}

std::size_t SessionContext::key_blocks() const {
  const auto w = sharing::block_width(field);
  return (group().element_width() + w - 1) / w;
}

void Transport::send(Message msg, const Path& route) {
  if (route.nodes.size() < 2) throw std::invalid_argument("transport route needs at least one hop");
  transfers_.push_back({msg.kind, msg.wire_size(), route.hops()});
  in_flight_.push_back({std::move(msg), route.nodes, 0});
}

std::vector<Transport::Delivery> Transport::step() {
  std::vector<Delivery> delivered;
  std::vector<InFlight> still;
  still.reserve(in_flight_.size());
  for (auto& f : in_flight_) {
    ++f.position;
    bytes_ += f.msg.wire_size();
    const NodeId at = f.route[f.position];
    if (observer_) observer_->on_arrival(at, f.msg);
    if (f.position + 1 == f.route.size()) {
      delivered.push_back({std::move(f.msg), at});
    } else {
      still.push_back(std::move(f));
    }
  }
  in_flight_ = std::move(still);
  return delivered;
}

std::vector<Message> phase1(const SessionContext& ctx, Rng& rng) {
  const auto& group = ctx.group();
  const auto& cfg = ctx.config;
  const auto& source = ctx.keys.keypair(cfg.source);
  const auto blocks = sharing::chunk_secret(ctx.field, source.public_key.encoding);
  auto shares = sharing::share_blocks(ctx.field, blocks, cfg.theta, ctx.plan.overlay.size(), rng);

  std::vector<Message> out;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    auto& share = shares[i];
    share.signature = crypto::sign(group, source, sharing::signing_payload(ctx.field, share));
    const auto& route = ctx.plan.overlay[i].nodes;
    Message msg;
    msg.kind = MessageKind::share;
    msg.session = ctx.session_id;
    msg.envelope = {static_cast<std::uint32_t>(i), 0, route};
    msg.payload = crypto::asym_encrypt(group, ctx.keys.public_key(route[1]),
                                       sharing::encode_share(ctx.field, share), rng);
    out.push_back(std::move(msg));
  }
  return out;
}

RelayResult relay(const SessionContext& ctx, NodeId at, const Message& msg,
                  SessionObserver* observer, Rng& rng) {
  const auto& route = msg.envelope.overlay_route;
  const std::size_t hop = msg.envelope.hop + 1;
  if (hop + 1 >= route.size() || route[hop] != at) return {};
  auto plain = crypto::asym_decrypt(ctx.group(), ctx.keys.keypair(at).secret, msg.payload);
  if (!plain) return {};
  RelayResult result;
  if (observer) {
    if (auto replacement = observer->on_relay(at, msg, *plain)) {
      plain = std::move(replacement);
      result.substituted = true;
    }
  }
  Message out = msg;
  out.envelope.hop = static_cast<std::uint32_t>(hop);
  out.payload = crypto::asym_encrypt(ctx.group(), ctx.keys.public_key(route[hop + 1]), *plain, rng);
  result.forwarded = std::move(out);
  return result;
}

namespace {

// Visits every k-combination of {0..n-1} in lexicographic order.
template <typename Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    fn(std::span<const std::size_t>(idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

Phase2Result phase2(const SessionContext& ctx, std::span<const sharing::BlockShare> received,
                    Rng& rng) {
  const auto& group = ctx.group();
  const auto& cfg = ctx.config;
  Phase2Result result;

  std::vector<const sharing::BlockShare*> shares;
  for (const auto& s : received) shares.push_back(&s);
  std::stable_sort(shares.begin(), shares.end(),
                   [](const auto* a, const auto* b) { return a->index < b->index; });
  shares.erase(std::unique(shares.begin(), shares.end(),
                           [](const auto* a, const auto* b) { return a->index == b->index; }),
               shares.end());
  if (shares.size() < cfg.theta) {
    result.failure = FailureReason::insufficient_shares;
    return result;
  }

  std::map<std::pair<Bytes, std::size_t>, bool> verified_cache;
  auto share_verifies = [&](const crypto::Element& key, std::size_t pos) {
    auto [it, inserted] = verified_cache.try_emplace({key.encoding, pos}, false);
    if (inserted) {
      const auto& s = *shares[pos];
      it->second = crypto::verify(group, key, sharing::signing_payload(ctx.field, s), s.signature);
    }
    return it->second;
  };

  const std::size_t key_len = group.element_width();
  std::vector<sharing::BlockShare> subset;
  for_each_combination(shares.size(), cfg.theta, [&](std::span<const std::size_t> pick) {
    ++result.subsets_tried;
    subset.clear();
    for (auto p : pick) subset.push_back(*shares[p]);
    crypto::Element candidate;
    try {
      const auto blocks = sharing::reconstruct_blocks(ctx.field, subset, cfg.theta);
      candidate.encoding = sharing::unchunk_secret(ctx.field, blocks, key_len);
    } catch (const FormatError&) {
      return;
    } catch (const std::invalid_argument&) {
      return;
    }
    if (!group.is_public_key(candidate)) return;
    for (auto p : pick) {
      if (!share_verifies(candidate, p)) return;
    }
    if (std::find(result.verified_keys.begin(), result.verified_keys.end(), candidate) ==
        result.verified_keys.end()) {
      result.verified_keys.push_back(std::move(candidate));
    }
  });

  if (result.verified_keys.empty()) {
    result.failure = FailureReason::attack_detected;
    return result;
  }
  if (result.verified_keys.size() > 1) {
    result.failure = FailureReason::conflicting_keys;
    return result;
  }
  result.source_key = result.verified_keys.front();

  Message reply;
  reply.kind = MessageKind::pubkey_reply;
  reply.session = ctx.session_id;
  reply.envelope.overlay_route = {cfg.destination, cfg.source};
  reply.payload = crypto::asym_encrypt(group, *result.source_key,
                                       ctx.keys.public_key(cfg.destination).encoding, rng);
  result.reply = std::move(reply);
  return result;
}

Phase3Result phase3(const SessionContext& ctx, const crypto::Element& source_view_of_peer,
                    const crypto::Element& destination_view_of_peer, SessionObserver* observer,
                    Rng& rng) {
  const auto& group = ctx.group();
  const auto& cfg = ctx.config;
  Phase3Result result;

  const auto k_src = crypto::derive_pairwise(group, ctx.keys.keypair(cfg.source).secret,
                                             source_view_of_peer);
  Message data;
  data.kind = MessageKind::data;
  data.session = ctx.session_id;
  data.envelope.overlay_route = {cfg.source, cfg.destination};
  for (auto& b : data.nonce) b = static_cast<std::uint8_t>(rng());
  data.payload = crypto::sym_encrypt(k_src.symmetric_key(), cfg.payload, data.nonce);

  Transport transport(observer);
  transport.send(std::move(data), ctx.plan.data_path);
  result.physical_hops = ctx.plan.data_path.hops();
  while (!transport.idle()) {
    ++result.rounds;
    for (auto& dl : transport.step()) {
      if (dl.at != cfg.destination) {
        // Only the endpoints hold k_sd; anything else would be an exposure.
        ++result.intermediate_de_steps;
        continue;
      }
      const auto k_dst = crypto::derive_pairwise(
          group, ctx.keys.keypair(cfg.destination).secret, destination_view_of_peer);
      const auto plain = crypto::sym_decrypt(k_dst.symmetric_key(), dl.msg.payload, dl.msg.nonce);
      result.delivered = plain && *plain == cfg.payload;
    }
  }
  result.bytes = transport.bytes();
  result.transfers.assign(transport.transfers().begin(), transport.transfers().end());
  return result;
}

std::size_t SessionReport::de_total() const {
  std::size_t t = 0;
  for (auto v : de_steps_per_path) t += v;
  return t;
}

SessionReport run_session(const Network& net, const KeyDirectory& keys, const SessionConfig& config,
                          SessionObserver* observer, Seed seed, const sharing::PrimeField& field) {
  config.validate(net);
  if (keys.size() != net.params.n) throw std::invalid_argument("key directory does not match network");

  SessionReport report;
  report.seed = seed;
  report.n = net.params.n;
  report.k = net.params.k;
  report.rho = config.rho;
  report.theta = config.theta;

  PathPlan plan;
  try {
    plan = plan_paths(net, config.source, config.destination, config.rho, config.selection);
  } catch (const PlanError& e) {
    report.failure_reason = e.reason();
    return report;
  }

  Rng rng = make_rng(seed, "session");
  Rng adversary_rng = make_rng(seed, "adversary");
  const SessionContext ctx{net, keys, field, config, plan,
                           static_cast<std::uint32_t>(derive_seed(seed, "session-id"))};
  if (observer) observer->on_session_start(ctx, adversary_rng);

  report.de_steps_per_path.assign(plan.overlay.size(), 0);
  for (const auto& p : plan.overlay) report.key_exchange_overlay_hops += p.hops();
  report.data_path_physical_hops = plan.data_path.hops();

  const std::size_t timeout = config.share_timeout_rounds > 0
                                  ? config.share_timeout_rounds
                                  : 4 * std::max<std::size_t>(1, physical_diameter(net.topology));

  // ---- phase 1 ----
  Transport shares_transport(observer);
  for (auto& msg : phase1(ctx, rng)) {
    const auto path = msg.envelope.path_index;
    shares_transport.send(std::move(msg), plan.hop_routes[path][0]);
  }
  std::vector<sharing::BlockShare> received;
  std::size_t outstanding = plan.overlay.size();
  const auto& dest_key = keys.keypair(config.destination);
  while (outstanding > 0 && !shares_transport.idle() && report.phase1_rounds < timeout) {
    ++report.phase1_rounds;
    for (auto& dl : shares_transport.step()) {
      const auto path = dl.msg.envelope.path_index;
      if (dl.at == config.destination) {
        --outstanding;
        auto plain = crypto::asym_decrypt(keys.group(), dest_key.secret, dl.msg.payload);
        if (!plain) {
          ++report.dropped_messages;
          continue;
        }
        try {
          received.push_back(sharing::decode_block_share(field, *plain, ctx.key_blocks()));
        } catch (const FormatError&) {
          ++report.dropped_messages;
        }
        continue;
      }
      auto relayed = relay(ctx, dl.at, dl.msg, observer, rng);
      if (!relayed.forwarded) {
        --outstanding;
        ++report.dropped_messages;
        continue;
      }
      ++report.de_steps_per_path[path];
      if (relayed.substituted) ++report.substitutions;
      const auto hop = relayed.forwarded->envelope.hop;
      shares_transport.send(std::move(*relayed.forwarded), plan.hop_routes[path][hop]);
    }
  }
  report.shares_received = received.size();
  for (const auto& t : shares_transport.transfers()) report.share_physical_hops += t.physical_hops;

  auto finish = [&](FailureReason reason) {
    report.failure_reason = reason;
    report.success = reason == FailureReason::none;
    return report;
  };
  auto collect = [&](const Transport& t) {
    report.key_exchange_bytes += t.bytes();
    report.transport_bytes += t.bytes();
    report.transfers.insert(report.transfers.end(), t.transfers().begin(), t.transfers().end());
  };
  collect(shares_transport);

  // ---- phase 2 ----
  auto p2 = phase2(ctx, received, rng);
  report.subsets_tried = p2.subsets_tried;
  const auto& true_source_key = keys.public_key(config.source);
  report.forged_key_verified =
      std::any_of(p2.verified_keys.begin(), p2.verified_keys.end(),
                  [&](const crypto::Element& k) { return k != true_source_key; });
  if (!p2.source_key) return finish(p2.failure);
  report.forged_key_accepted = *p2.source_key != true_source_key;

  Transport reply_transport(observer);
  reply_transport.send(std::move(*p2.reply), plan.reply_path);
  report.reply_physical_hops = plan.reply_path.hops();
  std::optional<Bytes> reply_plain;
  while (!reply_transport.idle()) {
    ++report.phase2_rounds;
    for (auto& dl : reply_transport.step()) {
      if (dl.at == config.source) {
        reply_plain =
            crypto::asym_decrypt(keys.group(), keys.keypair(config.source).secret, dl.msg.payload);
      }
    }
  }
  collect(reply_transport);
  if (!reply_plain) return finish(FailureReason::reply_undecryptable);
  const crypto::Element destination_key{*reply_plain};
  if (!keys.group().is_public_key(destination_key)) return finish(FailureReason::reply_undecryptable);

  // ---- phase 3 ----
  const auto p3 = phase3(ctx, destination_key, *p2.source_key, observer, rng);
  report.phase3_rounds = p3.rounds;
  report.data_path_de_steps = p3.intermediate_de_steps;
  report.plaintext_exposures = p3.intermediate_de_steps;
  report.transport_bytes += p3.bytes;
  report.transfers.insert(report.transfers.end(), p3.transfers.begin(), p3.transfers.end());
  if (!p3.delivered) return finish(FailureReason::data_decrypt_failed);
  return finish(FailureReason::none);
}

void write_session_csv_header(std::ostream& os) {
  os << "seed,n,k,rho,theta,success,reason,de_total,kx_bytes,kx_rounds,data_hops\n";
}

void write_session_csv_row(std::ostream& os, const SessionReport& r) {
  os << r.seed << ',' << r.n << ',' << r.k << ',' << r.rho << ',' << r.theta << ','
     << (r.success ? 1 : 0) << ',' << to_string(r.failure_reason) << ',' << r.de_total() << ','
     << r.key_exchange_bytes << ',' << r.key_exchange_rounds() << ',' << r.data_path_physical_hops
     << '\n';
}

}  // namespace kpsec::protocol
