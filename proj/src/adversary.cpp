#include "kpsec/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "kpsec/parallel.hpp"

namespace kpsec::adversary {

void ReliabilityParams::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  if (rho < 1) throw std::invalid_argument("rho must be at least 1");
}

double reliability_analytic(const ReliabilityParams& params) {
  params.validate();
  const double clean = std::pow(1.0 - params.p, static_cast<double>(params.de));
  return 1.0 - std::pow(1.0 - clean, static_cast<double>(params.rho));
}

namespace {

constexpr std::size_t kBlockTrials = 4096;

}  // namespace

Estimate monte_carlo_reliability(const ReliabilityParams& params, std::size_t trials, Seed seed,
                                 std::size_t jobs) {
  params.validate();
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  const std::size_t blocks = (trials + kBlockTrials - 1) / kBlockTrials;
  std::vector<std::size_t> successes(blocks, 0);
  parallel_for(blocks, jobs, [&](std::size_t b) {
    Rng rng = make_rng(seed, "reliability", b);
    std::bernoulli_distribution captured(params.p);
    const std::size_t begin = b * kBlockTrials;
    const std::size_t end = std::min(trials, begin + kBlockTrials);
    std::size_t ok = 0;
    for (std::size_t t = begin; t < end; ++t) {
      bool any_clean = false;
      for (std::size_t path = 0; path < params.rho && !any_clean; ++path) {
        bool clean = true;
        for (std::size_t node = 0; node < params.de && clean; ++node) clean = !captured(rng);
        any_clean = clean;
      }
      ok += any_clean;
    }
    successes[b] = ok;
  });
  const double x = static_cast<double>(std::accumulate(successes.begin(), successes.end(), std::size_t{0}));
  const double nt = static_cast<double>(trials);
  Estimate est;
  est.trials = trials;
  est.mean = x / nt;
  // Agresti-Coull adjusted standard error; stays positive when every trial
  // lands on the same side.
  const double adjusted = (x + 2.0) / (nt + 4.0);
  est.stderr_ = std::sqrt(adjusted * (1.0 - adjusted) / (nt + 4.0));
  return est;
}

std::vector<NodeId> compromise(std::size_t n, std::pair<NodeId, NodeId> principals,
                               const AdversarySpec& spec) {
  if (n < 2) throw std::invalid_argument("network needs at least two nodes");
  if (principals.first >= n || principals.second >= n || principals.first == principals.second) {
    throw std::invalid_argument("principals must be two distinct nodes");
  }
  std::vector<NodeId> candidates;
  candidates.reserve(n - 2);
  for (NodeId v = 0; v < n; ++v) {
    if (v != principals.first && v != principals.second) candidates.push_back(v);
  }
  Rng rng = make_rng(spec.seed, "compromise");
  std::vector<NodeId> out;
  if (spec.model == AdversarySpec::Model::uniform_fraction) {
    if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) {
      throw std::invalid_argument("compromise fraction must lie in [0, 1]");
    }
    std::bernoulli_distribution captured(spec.fraction);
    for (auto v : candidates) {
      if (captured(rng)) out.push_back(v);
    }
    return out;
  }
  if (spec.count > candidates.size()) {
    throw std::invalid_argument("cannot compromise " + std::to_string(spec.count) +
                                " nodes: only " + std::to_string(candidates.size()) +
                                " non-principal nodes");
  }
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(out), spec.count, rng);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

bool path_compromised(const Path& path, std::span<const NodeId> compromised) {
  const auto mid = path.intermediates();
  return std::any_of(mid.begin(), mid.end(), [&](NodeId v) {
    return std::find(compromised.begin(), compromised.end(), v) != compromised.end();
  });
}

}  // namespace

std::size_t count_secure_paths(std::span<const Path> paths, std::span<const NodeId> compromised) {
  return static_cast<std::size_t>(std::count_if(
      paths.begin(), paths.end(), [&](const Path& p) { return !path_compromised(p, compromised); }));
}

bool mitm_outcome(std::span<const Path> paths, std::span<const NodeId> compromised,
                  std::size_t theta) {
  if (theta < 1) throw std::invalid_argument("theta must be at least 1");
  return paths.size() - count_secure_paths(paths, compromised) >= theta;
}

CompromisedNodes::CompromisedNodes(std::size_t n, std::span<const NodeId> compromised,
                                   Capability capability)
    : compromised_(n, false), capability_(capability) {
  for (auto v : compromised) compromised_.at(v) = true;
}

void CompromisedNodes::on_session_start(const protocol::SessionContext& ctx, Rng& rng) {
  field_ = &ctx.field;
  key_blocks_ = ctx.key_blocks();
  forged_key_.reset();
  forged_shares_.clear();
  if (capability_ != Capability::substitute_shares) return;
  const auto& group = ctx.group();
  forged_key_ = crypto::keygen(group, rng);
  const auto blocks = sharing::chunk_secret(ctx.field, forged_key_->public_key.encoding);
  forged_shares_ =
      sharing::share_blocks(ctx.field, blocks, ctx.config.theta, ctx.plan.overlay.size(), rng);
  for (auto& s : forged_shares_) {
    s.signature = crypto::sign(group, *forged_key_, sharing::signing_payload(ctx.field, s));
  }
}

void CompromisedNodes::on_arrival(NodeId at, const protocol::Message& msg) {
  if (at < compromised_.size() && compromised_[at]) transcript_.push_back(msg.payload);
}

std::optional<Bytes> CompromisedNodes::on_relay(NodeId at, const protocol::Message&,
                                                ByteView plaintext) {
  if (at >= compromised_.size() || !compromised_[at]) return std::nullopt;
  transcript_.emplace_back(plaintext.begin(), plaintext.end());
  if (capability_ != Capability::substitute_shares || !field_) return std::nullopt;
  sharing::BlockShare genuine;
  try {
    genuine = sharing::decode_block_share(*field_, plaintext, key_blocks_);
  } catch (const FormatError&) {
    return std::nullopt;
  }
  for (const auto& forged : forged_shares_) {
    if (forged.index == genuine.index) return sharing::encode_share(*field_, forged);
  }
  return std::nullopt;
}

std::size_t Threshold::resolve(std::size_t rho) const {
  if (rho == 0) return 0;
  if (mode == Mode::absolute) {
    if (value < 1.0) throw std::invalid_argument("theta must be at least 1");
    return std::min(rho, static_cast<std::size_t>(value));
  }
  if (!(value > 0.0 && value <= 1.0)) throw std::invalid_argument("theta ratio must lie in (0, 1]");
  const auto t = static_cast<std::size_t>(std::ceil(value * static_cast<double>(rho) - 1e-9));
  return std::clamp<std::size_t>(t, 1, rho);
}

namespace {

struct TrialOutcome {
  std::vector<std::size_t> secure;  // per fraction
  std::vector<bool> attacked;       // per fraction
};

constexpr std::size_t kPairAttempts = 10000;

}  // namespace

std::vector<SweepRow> attack_sweep(const SweepConfig& config) {
  const auto n = config.net.n;
  if (n < 3) throw std::invalid_argument("sweep needs at least three nodes");
  if (config.net.k < 1) throw std::invalid_argument("k must be at least 1");
  if (config.rho > config.net.k) throw std::invalid_argument("rho must not exceed k");
  if (config.trials < 1) throw std::invalid_argument("trials must be at least 1");
  for (double f : config.fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("fractions must lie in [0, 1]");
  }
  config.theta.resolve(std::max<std::size_t>(1, config.rho));

  const auto nf = config.fractions.size();
  std::vector<TrialOutcome> outcomes(config.trials);
  parallel_for(config.trials, config.jobs, [&](std::size_t t) {
    const auto keyrings = assign_keyrings(n, config.net.k, derive_seed(config.seed, "sweep-keyrings", t));
    const auto overlay = build_overlay(keyrings);
    Rng rng = make_rng(config.seed, "sweep-trial", t);
    std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));

    std::vector<Path> paths;
    NodeId s = 0, d = 0;
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt == kPairAttempts) {
        throw std::runtime_error("no source-destination pair with enough disjoint paths");
      }
      s = pick(rng);
      d = pick(rng);
      if (s == d) continue;
      paths = config.rho == 0
                  ? max_vertex_disjoint_paths(overlay, s, d)
                  : protocol::select_disjoint_paths(overlay, s, d, config.rho, config.selection);
      if (!paths.empty() && paths.size() >= config.rho) break;
    }
    const std::size_t theta = config.theta.resolve(paths.size());

    // Rank of every node in a random ordering of the non-principals; the
    // first m of that ordering are compromised.
    std::vector<NodeId> order;
    order.reserve(n - 2);
    for (NodeId v = 0; v < n; ++v) {
      if (v != s && v != d) order.push_back(v);
    }
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> rank(n, n);
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

    std::vector<std::size_t> first_hit;  // per path: smallest rank on it
    for (const auto& p : paths) {
      std::size_t r = n;
      for (auto v : p.intermediates()) r = std::min(r, rank[v]);
      first_hit.push_back(r);
    }

    auto& out = outcomes[t];
    out.secure.resize(nf);
    out.attacked.resize(nf);
    for (std::size_t i = 0; i < nf; ++i) {
      const auto m = static_cast<std::size_t>(
          std::llround(config.fractions[i] * static_cast<double>(n - 2)));
      const auto hit = static_cast<std::size_t>(
          std::count_if(first_hit.begin(), first_hit.end(), [&](std::size_t r) { return r < m; }));
      out.secure[i] = paths.size() - hit;
      out.attacked[i] = hit >= theta;
    }
  });

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < nf; ++i) {
    SweepRow row;
    row.fraction = config.fractions[i];
    row.trials = config.trials;
    double sum = 0.0, sum_sq = 0.0, wins = 0.0;
    for (const auto& o : outcomes) {
      const auto x = static_cast<double>(o.secure[i]);
      sum += x;
      sum_sq += x * x;
      wins += o.attacked[i] ? 1.0 : 0.0;
    }
    const double nt = static_cast<double>(config.trials);
    row.mean_secure_paths = sum / nt;
    row.std_secure_paths =
        config.trials > 1 ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / nt) / (nt - 1.0))) : 0.0;
    row.attack_success_rate = wins / nt;
    rows.push_back(row);
  }
  return rows;
}

std::optional<double> crossing_fraction(std::span<const SweepRow> rows) {
  std::optional<double> best;
  for (const auto& r : rows) {
    if (r.attack_success_rate >= 0.5 && (!best || r.fraction < *best)) best = r.fraction;
  }
  return best;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << "fraction,trials,mean_secure_paths,std_secure_paths,attack_success_rate\n";
  for (const auto& r : rows) {
    os << r.fraction << ',' << r.trials << ',' << r.mean_secure_paths << ',' << r.std_secure_paths
       << ',' << r.attack_success_rate << '\n';
  }
}

DeCensus de_step_census(const OverlayGraph& g, std::span<const std::pair<NodeId, NodeId>> pairs,
                        std::size_t rho, protocol::PathSelection selection) {
  if (rho < 1) throw std::invalid_argument("rho must be at least 1");
  DeCensus census;
  std::size_t total = 0;
  for (const auto& [s, d] : pairs) {
    const auto paths = protocol::select_disjoint_paths(g, s, d, rho, selection);
    if (paths.size() < rho) {
      ++census.pairs_skipped;
      continue;
    }
    ++census.pairs_used;
    for (const auto& p : paths) {
      total += p.hops() - 1;
      ++census.paths;
    }
  }
  if (census.paths) census.mean_de = static_cast<double>(total) / static_cast<double>(census.paths);
  return census;
}

}  // namespace kpsec::adversary
