#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "kpsec/netmodel.hpp"
#include "kpsec/paths.hpp"
#include "kpsec/protocol.hpp"
#include "kpsec/rng.hpp"

namespace kpsec::adversary {

// ---- reliability of multi-path systems -----------------------------------

struct ReliabilityParams {
  double p = 0.1;       // per-node compromise probability
  std::size_t de = 3;   // intermediate D-E steps per path
  std::size_t rho = 5;  // disjoint paths

  void validate() const;
};

// R = 1 - (1 - (1 - p)^de)^rho
double reliability_analytic(const ReliabilityParams& params);

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t trials = 0;
};

// rho independent paths of `de` nodes, each compromised i.i.d. with
// probability p; a trial succeeds iff at least one path is clean. Trials are
// split into fixed blocks with their own streams, so `jobs` does not change
// the result.
Estimate monte_carlo_reliability(const ReliabilityParams& params, std::size_t trials, Seed seed,
                                 std::size_t jobs = 1);

// ---- node compromise -------------------------------------------------------

enum class Capability { observe, substitute_shares };

struct AdversarySpec {
  enum class Model { uniform_fraction, fixed_count };
  Model model = Model::uniform_fraction;
  double fraction = 0.0;   // uniform_fraction: each non-principal i.i.d.
  std::size_t count = 0;   // fixed_count: uniform sample without replacement
  Capability capability = Capability::observe;
  Seed seed = 0;

  static AdversarySpec uniform(double p, Capability cap, Seed seed) {
    return {Model::uniform_fraction, p, 0, cap, seed};
  }
  static AdversarySpec fixed(std::size_t m, Capability cap, Seed seed) {
    return {Model::fixed_count, 0.0, m, cap, seed};
  }
};

// Sorted compromised node ids; the principals are never included.
// Throws std::invalid_argument for p outside [0, 1] or m > n - 2.
std::vector<NodeId> compromise(std::size_t n, std::pair<NodeId, NodeId> principals,
                               const AdversarySpec& spec);

// Paths whose intermediate nodes are all uncompromised.
std::size_t count_secure_paths(std::span<const Path> paths, std::span<const NodeId> compromised);

// Cooperative man-in-the-middle: succeeds iff at least theta paths carry a
// compromised intermediate, i.e. the attacker can deliver theta consistent
// forged shares. For theta == rho every path must be hit.
bool mitm_outcome(std::span<const Path> paths, std::span<const NodeId> compromised,
                  std::size_t theta);

// ---- protocol-level adversary ----------------------------------------------

// Compromised nodes plugged into a protocol session. Every message they see is
// appended to the transcript. With substitute_shares, compromised overlay
// relays coordinate on one forged key pair and swap each share they relay for
// the forged share with the same index, signed under the forged key.
class CompromisedNodes final : public protocol::SessionObserver {
 public:
  CompromisedNodes(std::size_t n, std::span<const NodeId> compromised, Capability capability);

  void on_session_start(const protocol::SessionContext& ctx, Rng& rng) override;
  void on_arrival(NodeId at, const protocol::Message& msg) override;
  std::optional<Bytes> on_relay(NodeId at, const protocol::Message& msg,
                                ByteView plaintext) override;

  bool is_compromised(NodeId v) const { return compromised_[v]; }
  std::span<const Bytes> transcript() const { return transcript_; }
  const std::optional<crypto::KeyPair>& forged_key() const { return forged_key_; }

 private:
  std::vector<bool> compromised_;
  Capability capability_;
  const sharing::PrimeField* field_ = nullptr;
  std::size_t key_blocks_ = 0;
  std::optional<crypto::KeyPair> forged_key_;
  std::vector<sharing::BlockShare> forged_shares_;
  std::vector<Bytes> transcript_;
};

// ---- experiments -----------------------------------------------------------

// Threshold either fixed or as a fraction of the paths in use (rounded up,
// clamped to [1, rho]).
struct Threshold {
  enum class Mode { absolute, fraction };
  Mode mode = Mode::fraction;
  double value = 1.0;

  static Threshold absolute(std::size_t t) { return {Mode::absolute, static_cast<double>(t)}; }
  static Threshold of_paths(double f) { return {Mode::fraction, f}; }
  std::size_t resolve(std::size_t rho) const;
};

struct SweepConfig {
  NetworkParams net;        // only n and k matter: the sweep is overlay-only
  std::size_t rho = 0;      // paths per pair; 0 uses every disjoint path
  Threshold theta = Threshold::of_paths(1.0);
  std::vector<double> fractions;
  std::size_t trials = 100;
  Seed seed = 1;
  std::size_t jobs = 1;
  protocol::PathSelection selection = protocol::PathSelection::maximum_set;
};

struct SweepRow {
  double fraction = 0.0;
  std::size_t trials = 0;
  double mean_secure_paths = 0.0;
  double std_secure_paths = 0.0;
  double attack_success_rate = 0.0;
};

// Each trial draws a fresh overlay, a source-destination pair with enough
// disjoint paths, and a random ordering of the non-principal nodes. The first
// round(f * (n - 2)) nodes of that ordering are compromised at fraction f, so
// compromised sets are nested across fractions and the success rate is
// monotone by construction.
std::vector<SweepRow> attack_sweep(const SweepConfig& config);

// Smallest swept fraction whose success rate reaches 0.5, if any.
std::optional<double> crossing_fraction(std::span<const SweepRow> rows);

// fraction,trials,mean_secure_paths,std_secure_paths,attack_success_rate
void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

struct DeCensus {
  double mean_de = 0.0;     // per disjoint path
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;
  std::size_t paths = 0;

  double skip_rate() const {
    const auto total = pairs_used + pairs_skipped;
    return total ? static_cast<double>(pairs_skipped) / static_cast<double>(total) : 0.0;
  }
};

// Mean intermediate D-E steps (overlay length - 1) over the rho paths chosen
// for each pair; pairs with fewer than rho disjoint paths are skipped.
DeCensus de_step_census(const OverlayGraph& g, std::span<const std::pair<NodeId, NodeId>> pairs,
                        std::size_t rho,
                        protocol::PathSelection selection = protocol::PathSelection::maximum_set);

}  // namespace kpsec::adversary
