#include "kpsec/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "kpsec/adversary.hpp"
#include "kpsec/group.hpp"
#include "kpsec/parallel.hpp"
#include "kpsec/paths.hpp"
#include "kpsec/protocol.hpp"

#ifndef KPSEC_VERSION
#define KPSEC_VERSION "0.0.0"
#endif

namespace kpsec::cli {

std::string_view version() { return KPSEC_VERSION; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    parts.push_back(trim(text.substr(start, pos - start)));
    if (pos == std::string_view::npos) return parts;
    start = pos + 1;
  }
}

double to_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

std::size_t to_count(const std::string& s) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw std::invalid_argument("not a non-negative integer: '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& tok : split(text, ',')) {
    if (tok.find(':') == std::string::npos) {
      out.push_back(to_real(tok));
      continue;
    }
    const auto r = split(tok, ':');
    if (r.size() != 3) throw std::invalid_argument("range must be start:stop:step, got '" + tok + "'");
    const double a = to_real(r[0]), b = to_real(r[1]), step = to_real(r[2]);
    if (!(step > 0.0)) throw std::invalid_argument("range step must be positive");
    for (std::size_t i = 0;; ++i) {
      const double v = a + static_cast<double>(i) * step;
      if (v > b + 1e-9 * step) break;
      out.push_back(std::round(v * 1e12) / 1e12);
    }
  }
  return out;
}

std::vector<std::size_t> parse_count_list(std::string_view text) {
  std::vector<std::size_t> out;
  for (const auto& tok : split(text, ',')) {
    const auto dash = tok.find('-');
    if (dash == std::string::npos) {
      out.push_back(to_count(tok));
      continue;
    }
    const auto a = to_count(trim(std::string_view(tok).substr(0, dash)));
    const auto b = to_count(trim(std::string_view(tok).substr(dash + 1)));
    if (b < a) throw std::invalid_argument("empty range '" + tok + "'");
    for (auto v = a; v <= b; ++v) out.push_back(v);
  }
  return out;
}

namespace {

struct Common {
  Seed seed = 1;
  std::string out;
  std::size_t jobs = 1;
  std::string config;
};

void add_common(CLI::App* cmd, Common& c, bool jobs) {
  cmd->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  cmd->add_option("--out", c.out, "Output file (default: stdout)");
  cmd->add_option("--config", c.config, "key=value file; flags given on the command line win");
  if (jobs) cmd->add_option("--jobs", c.jobs, "Worker threads")->capture_default_str();
}

void header(std::ostream& os, std::string_view cmd, Seed seed) {
  os << "# kpsec-sim v" << version() << " cmd=" << cmd << " seed=" << seed << '\n';
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file '" + path + "'");
  return read_network(in);
}

std::vector<std::pair<NodeId, NodeId>> parse_pairs(const std::string& text, std::size_t n) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  for (const auto& tok : split(text, ',')) {
    const auto parts = split(tok, ':');
    if (parts.size() != 2) throw std::invalid_argument("pair must be s:d, got '" + tok + "'");
    const auto s = to_count(parts[0]), d = to_count(parts[1]);
    if (s >= n || d >= n) throw std::invalid_argument("pair '" + tok + "' names a node out of range");
    if (s == d) throw std::invalid_argument("pair '" + tok + "' has identical endpoints");
    pairs.emplace_back(static_cast<NodeId>(s), static_cast<NodeId>(d));
  }
  return pairs;
}

protocol::PathSelection parse_selection(const std::string& s) {
  if (s == "maximum-set") return protocol::PathSelection::maximum_set;
  if (s == "shortest-augmenting") return protocol::PathSelection::shortest_augmenting;
  throw std::invalid_argument("unknown path selection '" + s + "'");
}

// ---- topo ----

struct TopoArgs {
  Common common;
  NetworkParams net;
};

void cmd_topo(const TopoArgs& a, std::ostream& os) {
  NetworkParams p = a.net;
  p.seed = a.common.seed;
  p.validate();
  const auto net = generate_network(p);
  header(os, "topo", p.seed);
  write_network(os, net);
}

// ---- paths ----

struct PathsArgs {
  Common common;
  std::string net;
  std::string pairs;
  std::size_t random_pairs = 200;
  std::size_t limit = 0;
};

void cmd_paths(const PathsArgs& a, std::ostream& os) {
  const auto net = load_network(a.net);
  const auto n = net.params.n;
  const auto pairs = a.pairs.empty() ? random_pairs(n, a.random_pairs, a.common.seed)
                                     : parse_pairs(a.pairs, n);
  if (pairs.empty()) throw std::invalid_argument("no pairs to evaluate");
  const auto stats = path_length_stats(
      net.overlay, pairs, a.limit ? std::optional<std::size_t>(a.limit) : std::nullopt);
  header(os, "paths", a.common.seed);
  write_path_stats_csv(os, stats);
}

// ---- reliability ----

struct ReliabilityArgs {
  Common common;
  std::string p = "0.05,0.1,0.2";
  std::string de = "1-8";
  std::string rho = "1-10";
  std::size_t trials = 100000;
};

void cmd_reliability(const ReliabilityArgs& a, std::ostream& os) {
  const auto ps = parse_real_list(a.p);
  const auto des = parse_count_list(a.de);
  const auto rhos = parse_count_list(a.rho);
  std::vector<adversary::ReliabilityParams> cells;
  for (double p : ps) {
    for (auto de : des) {
      for (auto rho : rhos) {
        adversary::ReliabilityParams cell{p, de, rho};
        cell.validate();
        cells.push_back(cell);
      }
    }
  }
  std::vector<adversary::Estimate> mc(cells.size());
  if (a.trials > 0) {
    parallel_for(cells.size(), a.common.jobs, [&](std::size_t i) {
      mc[i] = adversary::monte_carlo_reliability(cells[i], a.trials,
                                                 derive_seed(a.common.seed, "reliability-cell", i));
    });
  }
  header(os, "reliability", a.common.seed);
  os << "p,de,rho,R_analytic";
  if (a.trials > 0) os << ",R_mc,stderr,trials";
  os << '\n' << std::setprecision(10);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    os << c.p << ',' << c.de << ',' << c.rho << ',' << adversary::reliability_analytic(c);
    if (a.trials > 0) os << ',' << mc[i].mean << ',' << mc[i].stderr_ << ',' << mc[i].trials;
    os << '\n';
  }
}

// ---- simulate ----

struct SimulateArgs {
  Common common;
  std::string net;
  std::string group = "p256";
  std::size_t rho = 5;
  std::size_t theta = 3;
  std::size_t sessions = 100;
  std::string adversary = "none";
  double fraction = 0.0;
  std::size_t count = 0;
  std::string capability = "observe";
  std::size_t payload_bytes = 32;
  std::size_t timeout = 0;
  std::string selection = "maximum-set";
};

constexpr std::size_t kPairAttempts = 10000;

void cmd_simulate(const SimulateArgs& a, std::ostream& os) {
  if (a.sessions < 1) throw std::invalid_argument("sessions must be at least 1");
  if (a.payload_bytes < 1) throw std::invalid_argument("payload must be at least one byte");
  if (a.adversary != "none" && a.adversary != "fraction" && a.adversary != "count") {
    throw std::invalid_argument("adversary must be none, fraction or count");
  }
  if (a.capability != "observe" && a.capability != "substitute") {
    throw std::invalid_argument("capability must be observe or substitute");
  }
  if (a.adversary == "fraction" && !(a.fraction >= 0.0 && a.fraction <= 1.0)) {
    throw std::invalid_argument("adversary fraction must lie in [0, 1]");
  }
  const auto& group = crypto::group_by_name(a.group);
  const auto selection = parse_selection(a.selection);
  const auto net = load_network(a.net);
  const auto n = net.params.n;
  if (a.adversary == "count" && a.count > n - 2) {
    throw std::invalid_argument("adversary count exceeds the " + std::to_string(n - 2) +
                                " non-principal nodes");
  }

  const Seed seed = a.common.seed;
  const protocol::KeyDirectory keys(group, n, derive_seed(seed, "keys"));
  const auto capability = a.capability == "substitute" ? adversary::Capability::substitute_shares
                                                       : adversary::Capability::observe;

  std::vector<protocol::SessionReport> reports(a.sessions);
  // Validate once up front so a bad rho/theta fails before any work.
  protocol::SessionConfig probe;
  probe.source = 0;
  probe.destination = 1;
  probe.rho = a.rho;
  probe.theta = a.theta;
  probe.payload = Bytes(a.payload_bytes, 0);
  probe.validate(net);

  parallel_for(a.sessions, a.common.jobs, [&](std::size_t i) {
    const Seed session_seed = derive_seed(seed, "session", i);
    Rng rng = make_rng(seed, "simulate-pair", i);
    std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(n - 1));
    protocol::SessionConfig cfg = probe;
    cfg.share_timeout_rounds = a.timeout;
    cfg.selection = selection;
    for (std::size_t attempt = 0;; ++attempt) {
      if (attempt == kPairAttempts) {
        throw std::runtime_error("no source-destination pair with " + std::to_string(a.rho) +
                                 " disjoint paths");
      }
      cfg.source = pick(rng);
      cfg.destination = pick(rng);
      if (cfg.source == cfg.destination) continue;
      if (protocol::select_disjoint_paths(net.overlay, cfg.source, cfg.destination, a.rho, selection)
              .size() >= a.rho) {
        break;
      }
    }
    for (auto& b : cfg.payload) b = static_cast<std::uint8_t>(rng());

    std::optional<adversary::CompromisedNodes> observer;
    if (a.adversary != "none") {
      const auto spec = a.adversary == "fraction"
                            ? adversary::AdversarySpec::uniform(a.fraction, capability,
                                                                derive_seed(seed, "adversary", i))
                            : adversary::AdversarySpec::fixed(a.count, capability,
                                                              derive_seed(seed, "adversary", i));
      observer.emplace(n, adversary::compromise(n, {cfg.source, cfg.destination}, spec), capability);
    }
    reports[i] = protocol::run_session(net, keys, cfg, observer ? &*observer : nullptr, session_seed);
  });

  header(os, "simulate", seed);
  protocol::write_session_csv_header(os);
  for (const auto& r : reports) protocol::write_session_csv_row(os, r);
}

// ---- attack-sweep ----

struct SweepArgs {
  Common common;
  std::size_t n = 200;
  std::size_t k = 10;
  std::size_t rho = 0;
  std::size_t theta = 0;
  double theta_ratio = 1.0;
  std::string fractions = "0.05:0.6:0.05";
  std::size_t trials = 500;
  std::string selection = "maximum-set";
};

void cmd_attack_sweep(const SweepArgs& a, std::ostream& os) {
  adversary::SweepConfig cfg;
  cfg.net.n = a.n;
  cfg.net.k = a.k;
  cfg.net.seed = a.common.seed;
  cfg.net.validate();
  cfg.rho = a.rho;
  cfg.theta = a.theta > 0 ? adversary::Threshold::absolute(a.theta)
                          : adversary::Threshold::of_paths(a.theta_ratio);
  if (a.theta > 0 && a.rho > 0 && a.theta > a.rho) {
    throw std::invalid_argument("theta must not exceed rho");
  }
  cfg.fractions = parse_real_list(a.fractions);
  if (cfg.fractions.empty()) throw std::invalid_argument("no fractions to sweep");
  cfg.trials = a.trials;
  cfg.seed = a.common.seed;
  cfg.jobs = a.common.jobs;
  cfg.selection = parse_selection(a.selection);
  const auto rows = adversary::attack_sweep(cfg);
  header(os, "attack-sweep", a.common.seed);
  adversary::write_sweep_csv(os, rows);
  const auto crossing = adversary::crossing_fraction(rows);
  os << "# crossing_fraction=";
  if (crossing) {
    os << *crossing;
  } else {
    os << "none";
  }
  os << '\n';
}

// Lines of a key=value file turned into --key=value tokens.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + " is not key=value");
    }
    auto key = trim(std::string_view(t).substr(0, eq));
    const auto value = trim(std::string_view(t).substr(eq + 1));
    if (key.rfind("--", 0) != 0) key = "--" + key;
    if (key == "--config") throw std::invalid_argument("config files cannot include other configs");
    tokens.push_back(key + "=" + value);
  }
  return tokens;
}

// Splices the contents of --config right after the subcommand so explicit
// flags, which come later, take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      continue;
    }
    auto tokens = config_tokens(path);
    args.insert(args.begin() + 1, tokens.begin(), tokens.end());
    return args;
  }
  return args;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-path key exchange experiments", "kpsec-sim"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  TopoArgs topo;
  auto* c_topo = app.add_subcommand("topo", "Generate a topology and keyring file");
  add_common(c_topo, topo.common, false);
  c_topo->add_option("--n", topo.net.n, "Nodes")->capture_default_str();
  c_topo->add_option("--k", topo.net.k, "Keyring size")->capture_default_str();
  c_topo->add_option("--side", topo.net.side, "Field side (m)")->capture_default_str();
  c_topo->add_option("--range", topo.net.range, "Radio range (m)")->capture_default_str();

  PathsArgs paths;
  auto* c_paths = app.add_subcommand("paths", "Vertex-disjoint overlay path statistics");
  add_common(c_paths, paths.common, false);
  c_paths->add_option("--net", paths.net, "Network file")->required();
  c_paths->add_option("--pairs", paths.pairs, "Explicit pairs s:d,s:d,...");
  c_paths->add_option("--random-pairs,--trials", paths.random_pairs, "Random pairs to draw")
      ->capture_default_str();
  c_paths->add_option("--limit", paths.limit, "Stop after this many paths (0: all)")
      ->capture_default_str();

  ReliabilityArgs rel;
  auto* c_rel = app.add_subcommand("reliability", "Analytic and Monte Carlo path reliability");
  add_common(c_rel, rel.common, true);
  c_rel->add_option("--p", rel.p, "Compromise probabilities")->capture_default_str();
  c_rel->add_option("--de", rel.de, "D-E steps per path")->capture_default_str();
  c_rel->add_option("--rho", rel.rho, "Path counts")->capture_default_str();
  c_rel->add_option("--trials", rel.trials, "Monte Carlo trials per cell (0: analytic only)")
      ->capture_default_str();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Run protocol sessions");
  add_common(c_sim, sim.common, true);
  c_sim->add_option("--net", sim.net, "Network file")->required();
  c_sim->add_option("--group", sim.group, "toy or p256")->capture_default_str();
  c_sim->add_option("--rho", sim.rho, "Disjoint paths")->capture_default_str();
  c_sim->add_option("--theta", sim.theta, "Share threshold")->capture_default_str();
  c_sim->add_option("--sessions,--trials", sim.sessions, "Sessions to run")->capture_default_str();
  c_sim->add_option("--adversary", sim.adversary, "none, fraction or count")->capture_default_str();
  c_sim->add_option("--adversary-fraction", sim.fraction, "Per-node compromise probability");
  c_sim->add_option("--adversary-count", sim.count, "Number of compromised nodes");
  c_sim->add_option("--capability", sim.capability, "observe or substitute")->capture_default_str();
  c_sim->add_option("--payload-bytes", sim.payload_bytes, "Phase-3 payload size")
      ->capture_default_str();
  c_sim->add_option("--timeout", sim.timeout, "Share timeout in rounds (0: 4 x diameter)")
      ->capture_default_str();
  c_sim->add_option("--selection", sim.selection, "maximum-set or shortest-augmenting")
      ->capture_default_str();

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("attack-sweep", "Cooperative MITM success versus compromise");
  add_common(c_sweep, sweep.common, true);
  c_sweep->add_option("--n", sweep.n, "Nodes")->capture_default_str();
  c_sweep->add_option("--k", sweep.k, "Keyring size")->capture_default_str();
  c_sweep->add_option("--rho", sweep.rho, "Paths per pair (0: all disjoint paths)")
      ->capture_default_str();
  c_sweep->add_option("--theta", sweep.theta, "Absolute threshold (0: use --theta-ratio)")
      ->capture_default_str();
  c_sweep->add_option("--theta-ratio", sweep.theta_ratio, "Threshold as a fraction of paths")
      ->capture_default_str();
  c_sweep->add_option("--fractions", sweep.fractions, "Compromise fractions")
      ->capture_default_str();
  c_sweep->add_option("--trials", sweep.trials, "Trials per fraction")->capture_default_str();
  c_sweep->add_option("--selection", sweep.selection, "maximum-set or shortest-augmenting")
      ->capture_default_str();

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "kpsec-sim: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "kpsec-sim: error: " << e.what() << '\n';
    return 2;
  }

  std::ostringstream body;
  const Common* common = nullptr;
  try {
    if (c_topo->parsed()) {
      common = &topo.common;
      cmd_topo(topo, body);
    } else if (c_paths->parsed()) {
      common = &paths.common;
      cmd_paths(paths, body);
    } else if (c_rel->parsed()) {
      common = &rel.common;
      cmd_reliability(rel, body);
    } else if (c_sim->parsed()) {
      common = &sim.common;
      cmd_simulate(sim, body);
    } else {
      common = &sweep.common;
      cmd_attack_sweep(sweep, body);
    }
  } catch (const std::exception& e) {
    err << "kpsec-sim: error: " << e.what() << '\n';
    return 1;
  }

  if (common->out.empty() || common->out == "-") {
    out << body.str();
    out.flush();
    if (!out) {
      err << "kpsec-sim: error: failed writing output\n";
      return 1;
    }
    return 0;
  }
  std::ofstream file(common->out, std::ios::binary | std::ios::trunc);
  if (!file) {
    err << "kpsec-sim: error: cannot open '" << common->out << "' for writing\n";
    return 1;
  }
  file << body.str();
  file.close();
  if (!file) {
    err << "kpsec-sim: error: failed writing '" << common->out << "'\n";
    return 1;
  }
  return 0;
}

}  // namespace kpsec::cli
