#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kpsec/crypto.hpp"
#include "kpsec/netmodel.hpp"
#include "kpsec/paths.hpp"
#include "kpsec/sharing.hpp"

namespace kpsec::protocol {

// Key pairs of every node, derived deterministically from a seed. Public keys
// are what keyrings refer to; a node only ever uses its own private scalar.
class KeyDirectory {
 public:
  KeyDirectory(const crypto::Group& group, std::size_t n, Seed seed);

  const crypto::Group& group() const { return *group_; }
  std::size_t size() const { return keys_.size(); }
  const crypto::Element& public_key(NodeId v) const { return keys_.at(v).public_key; }
  const crypto::KeyPair& keypair(NodeId v) const { return keys_.at(v); }

 private:
  const crypto::Group* group_;
  std::vector<crypto::KeyPair> keys_;
};

enum class PathSelection {
  // rho paths taken, in decomposition order, from a maximum disjoint set.
  maximum_set,
  // The first rho breadth-first augmentations only.
  shortest_augmenting,
};

std::vector<Path> select_disjoint_paths(const OverlayGraph& g, NodeId s, NodeId d, std::size_t rho,
                                        PathSelection selection);

struct SessionConfig {
  NodeId source = 0;
  NodeId destination = 1;
  std::size_t rho = 5;    // disjoint paths carrying shares
  std::size_t theta = 3;  // shares needed to rebuild the source key
  Bytes payload;
  // Rounds the destination waits for shares; 0 selects 4 x physical diameter.
  std::size_t share_timeout_rounds = 0;
  PathSelection selection = PathSelection::maximum_set;

  // Throws std::invalid_argument unless 1 <= theta <= rho <= k and s != d.
  void validate(const Network& net) const;
};

enum class FailureReason {
  none,
  insufficient_disjoint_paths,
  physical_unreachable,
  insufficient_shares,
  attack_detected,    // no share subset verifies under its reconstructed key
  conflicting_keys,   // two different keys each verify on some subset
  reply_undecryptable,
  data_decrypt_failed,
};

std::string_view to_string(FailureReason r);

enum class MessageKind : std::uint8_t { share = 1, pubkey_reply = 2, data = 3 };

// Source-routed header. `hop` is the position of the current overlay sender in
// `overlay_route`.
struct Envelope {
  std::uint32_t path_index = 0;
  std::uint32_t hop = 0;
  std::vector<NodeId> overlay_route;
};

struct Message {
  MessageKind kind = MessageKind::share;
  std::uint32_t session = 0;
  Envelope envelope;
  crypto::Nonce nonce{};  // Data only
  Bytes payload;

  // kind(1) session(4) path(1) hop(1) route-len(1) route(4 each) [nonce(12)] payload
  std::size_t wire_size() const;
};

struct PathPlan {
  std::vector<Path> overlay;                  // rho disjoint overlay paths
  std::vector<std::vector<Path>> hop_routes;  // [path][overlay hop] -> physical route
  Path data_path;                             // source -> destination, physical
  Path reply_path;                            // destination -> source, physical
};

class PlanError : public std::runtime_error {
 public:
  PlanError(FailureReason reason, const std::string& what)
      : std::runtime_error(what), reason_(reason) {}
  FailureReason reason() const { return reason_; }

 private:
  FailureReason reason_;
};

// Throws PlanError (insufficient_disjoint_paths or physical_unreachable).
PathPlan plan_paths(const Network& net, NodeId s, NodeId d, std::size_t rho,
                    PathSelection selection = PathSelection::maximum_set);

struct SessionContext {
  const Network& net;
  const KeyDirectory& keys;
  const sharing::PrimeField& field;
  const SessionConfig& config;
  const PathPlan& plan;
  std::uint32_t session_id = 0;

  const crypto::Group& group() const { return keys.group(); }
  // Number of field blocks in an encoded public key.
  std::size_t key_blocks() const;
};

// Hooks through which compromised nodes see and tamper with traffic.
class SessionObserver {
 public:
  virtual ~SessionObserver() = default;
  virtual void on_session_start(const SessionContext&, Rng&) {}
  // Every physical arrival of a message at node `at`, before any processing.
  virtual void on_arrival(NodeId /*at*/, const Message&) {}
  // Overlay relay `at` decrypted a share. A returned value replaces the
  // plaintext before re-encryption.
  virtual std::optional<Bytes> on_relay(NodeId /*at*/, const Message&, ByteView /*plaintext*/) {
    return std::nullopt;
  }
};

struct Transfer {
  MessageKind kind = MessageKind::share;
  std::size_t wire_size = 0;
  std::size_t physical_hops = 0;
};

// Synchronous delivery: a message advances one physical hop per round.
class Transport {
 public:
  explicit Transport(SessionObserver* observer = nullptr) : observer_(observer) {}

  // route.nodes.front() currently holds the message.
  void send(Message msg, const Path& route);

  struct Delivery {
    Message msg;
    NodeId at = 0;
  };
  // Advances every in-flight message by one hop; returns those that reached
  // the end of their route.
  std::vector<Delivery> step();

  bool idle() const { return in_flight_.empty(); }
  std::uint64_t bytes() const { return bytes_; }
  std::span<const Transfer> transfers() const { return transfers_; }

 private:
  struct InFlight {
    Message msg;
    std::vector<NodeId> route;
    std::size_t position = 0;
  };
  SessionObserver* observer_;
  std::vector<InFlight> in_flight_;
  std::vector<Transfer> transfers_;
  std::uint64_t bytes_ = 0;
};

// Phase 1: one signed share per planned path, encrypted for the first overlay
// hop of that path.
std::vector<Message> phase1(const SessionContext& ctx, Rng& rng);

struct RelayResult {
  std::optional<Message> forwarded;  // nullopt: undecryptable, dropped
  bool substituted = false;
};

// Overlay relay at node `at`: decrypt, optionally let the observer tamper,
// re-encrypt under the next overlay hop's public key.
RelayResult relay(const SessionContext& ctx, NodeId at, const Message& msg,
                  SessionObserver* observer, Rng& rng);

struct Phase2Result {
  std::optional<crypto::Element> source_key;  // accepted reconstruction
  std::vector<crypto::Element> verified_keys;
  FailureReason failure = FailureReason::none;
  std::size_t subsets_tried = 0;
  std::optional<Message> reply;
};

// Phase 2 at the destination: every theta-subset (lowest indices first) is
// reconstructed and the shares it used are checked against the rebuilt key.
// Exactly one verifying key is accepted and answered with the destination's
// public key encrypted under it.
Phase2Result phase2(const SessionContext& ctx, std::span<const sharing::BlockShare> received,
                     Rng& rng);

struct Phase3Result {
  bool delivered = false;
  std::size_t physical_hops = 0;
  std::size_t intermediate_de_steps = 0;
  std::size_t rounds = 0;
  std::uint64_t bytes = 0;
  std::vector<Transfer> transfers;
};

// Phase 3: both ends derive k_sd; the payload crosses the shortest physical
// path under the symmetric key.
Phase3Result phase3(const SessionContext& ctx, const crypto::Element& source_view_of_peer,
                    const crypto::Element& destination_view_of_peer, SessionObserver* observer,
                    Rng& rng);

struct SessionReport {
  Seed seed = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t rho = 0;
  std::size_t theta = 0;

  bool success = false;
  FailureReason failure_reason = FailureReason::none;

  std::vector<std::size_t> de_steps_per_path;
  std::size_t key_exchange_overlay_hops = 0;  // sum of overlay path lengths
  std::size_t share_physical_hops = 0;
  std::size_t reply_physical_hops = 0;
  std::uint64_t key_exchange_bytes = 0;       // phase 1 + phase 2 transport bytes
  std::size_t data_path_physical_hops = 0;
  std::size_t data_path_de_steps = 0;
  std::size_t phase1_rounds = 0;
  std::size_t phase2_rounds = 0;
  std::size_t phase3_rounds = 0;
  std::uint64_t transport_bytes = 0;          // everything, data included

  std::size_t shares_received = 0;
  std::size_t dropped_messages = 0;
  std::size_t substitutions = 0;
  std::size_t subsets_tried = 0;
  // Some subset verified under a key other than the source's.
  bool forged_key_verified = false;
  // The destination accepted a key other than the source's.
  bool forged_key_accepted = false;
  // Non-endpoint nodes that held phase-3 plaintext.
  std::size_t plaintext_exposures = 0;

  std::vector<Transfer> transfers;

  std::size_t de_total() const;
  std::size_t key_exchange_rounds() const { return phase1_rounds + phase2_rounds; }
};

// Full three-phase session; deterministic for a fixed seed. Failures are
// reported, never thrown (except for invalid configuration).
SessionReport run_session(const Network& net, const KeyDirectory& keys, const SessionConfig& config,
                          SessionObserver* observer, Seed seed,
                          const sharing::PrimeField& field = sharing::PrimeField::standard());

// seed,n,k,rho,theta,success,reason,de_total,kx_bytes,kx_rounds,data_hops
void write_session_csv_header(std::ostream& os);
void write_session_csv_row(std::ostream& os, const SessionReport& r);

}  // namespace kpsec::protocol
