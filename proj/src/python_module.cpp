#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "kpsec/adversary.hpp"
#include "kpsec/cli.hpp"
#include "kpsec/protocol.hpp"

namespace py = pybind11;
using namespace kpsec;

namespace {

py::bytes to_py(const Bytes& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

Bytes from_py(const py::bytes& b) {
  const std::string s = b;
  return Bytes(s.begin(), s.end());
}

std::vector<std::vector<NodeId>> as_lists(const std::vector<Path>& paths) {
  std::vector<std::vector<NodeId>> out;
  for (const auto& p : paths) out.push_back(p.nodes);
  return out;
}

protocol::PathSelection selection_by_name(const std::string& s) {
  if (s == "maximum-set") return protocol::PathSelection::maximum_set;
  if (s == "shortest-augmenting") return protocol::PathSelection::shortest_augmenting;
  throw py::value_error("unknown path selection '" + s + "'");
}

py::dict report_dict(const protocol::SessionReport& r) {
  py::dict d;
  d["seed"] = r.seed;
  d["success"] = r.success;
  d["reason"] = std::string(protocol::to_string(r.failure_reason));
  d["de_steps_per_path"] = r.de_steps_per_path;
  d["de_total"] = r.de_total();
  d["key_exchange_bytes"] = r.key_exchange_bytes;
  d["key_exchange_rounds"] = r.key_exchange_rounds();
  d["transport_bytes"] = r.transport_bytes;
  d["data_path_hops"] = r.data_path_physical_hops;
  d["data_path_de_steps"] = r.data_path_de_steps;
  d["shares_received"] = r.shares_received;
  d["substitutions"] = r.substitutions;
  d["forged_key_verified"] = r.forged_key_verified;
  d["forged_key_accepted"] = r.forged_key_accepted;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Key exchange over vertex-disjoint key-paths";
  m.attr("__version__") = std::string(cli::version());

  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<sharing::InsufficientShares>(m, "InsufficientShares", PyExc_ValueError);

  py::class_<NetworkParams>(m, "NetworkParams")
      .def(py::init([](std::size_t n, std::size_t k, double side, double range, Seed seed) {
             NetworkParams p{n, k, side, range, seed};
             p.validate();
             return p;
           }),
           py::arg("n") = 100, py::arg("k") = 10, py::arg("side") = 300.0,
           py::arg("range") = 100.0, py::arg("seed") = 1)
      .def_readwrite("n", &NetworkParams::n)
      .def_readwrite("k", &NetworkParams::k)
      .def_readwrite("side", &NetworkParams::side)
      .def_readwrite("range", &NetworkParams::range)
      .def_readwrite("seed", &NetworkParams::seed);

  py::class_<Network>(m, "Network")
      .def_readonly("params", &Network::params)
      .def_property_readonly("positions",
                             [](const Network& net) {
                               std::vector<std::pair<double, double>> out;
                               for (const auto& p : net.topology.positions()) out.emplace_back(p.x, p.y);
                               return out;
                             })
      .def_property_readonly("keyrings",
                             [](const Network& net) {
                               std::vector<std::vector<NodeId>> out;
                               for (const auto& r : net.keyrings) out.push_back(r.known);
                               return out;
                             })
      .def("overlay_successors",
           [](const Network& net, NodeId v) {
             const auto s = net.overlay.successors(v);
             return std::vector<NodeId>(s.begin(), s.end());
           })
      .def("physical_neighbors",
           [](const Network& net, NodeId v) {
             const auto s = net.topology.neighbors(v);
             return std::vector<NodeId>(s.begin(), s.end());
           })
      .def("disjoint_paths",
           [](const Network& net, NodeId s, NodeId d, std::optional<std::size_t> limit) {
             return as_lists(max_vertex_disjoint_paths(net.overlay, s, d, limit));
           },
           py::arg("s"), py::arg("d"), py::arg("limit") = std::nullopt)
      .def("shortest_physical_path",
           [](const Network& net, NodeId s, NodeId d) -> std::optional<std::vector<NodeId>> {
             if (auto p = shortest_physical_path(net.topology, s, d)) return p->nodes;
             return std::nullopt;
           })
      .def("to_text", [](const Network& net) {
        std::ostringstream os;
        write_network(os, net);
        return os.str();
      });

  m.def("generate_network", &generate_network, py::arg("params"));
  m.def("read_network", [](const std::string& text) {
    std::istringstream in(text);
    return read_network(in);
  });
  m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("label"), py::arg("index") = 0);

  m.def("reliability_analytic",
        [](double p, std::size_t de, std::size_t rho) {
          return adversary::reliability_analytic({p, de, rho});
        },
        py::arg("p"), py::arg("de"), py::arg("rho"));
  m.def("monte_carlo_reliability",
        [](double p, std::size_t de, std::size_t rho, std::size_t trials, Seed seed, std::size_t jobs) {
          const auto e = adversary::monte_carlo_reliability({p, de, rho}, trials, seed, jobs);
          return py::make_tuple(e.mean, e.stderr_, e.trials);
        },
        py::arg("p"), py::arg("de"), py::arg("rho"), py::arg("trials"), py::arg("seed") = 1,
        py::arg("jobs") = 1);

  m.def("share_secret",
        [](const py::bytes& secret, std::size_t theta, std::size_t count, Seed seed) {
          const auto& f = sharing::PrimeField::standard();
          Rng rng = make_rng(seed, "share-secret");
          const Bytes raw = from_py(secret);
          std::vector<py::bytes> out;
          for (const auto& s : sharing::share_blocks(f, sharing::chunk_secret(f, raw), theta, count, rng)) {
            out.push_back(to_py(sharing::encode_share(f, s)));
          }
          return out;
        },
        py::arg("secret"), py::arg("theta"), py::arg("count"), py::arg("seed") = 1);
  m.def("reconstruct_secret",
        [](const std::vector<py::bytes>& shares, std::size_t theta, std::size_t length) {
          const auto& f = sharing::PrimeField::standard();
          const std::size_t blocks = (length + sharing::block_width(f) - 1) / sharing::block_width(f);
          std::vector<sharing::BlockShare> decoded;
          for (const auto& s : shares) decoded.push_back(sharing::decode_block_share(f, from_py(s), blocks));
          return to_py(sharing::unchunk_secret(f, sharing::reconstruct_blocks(f, decoded, theta), length));
        },
        py::arg("shares"), py::arg("theta"), py::arg("length"));

  m.def("run_session",
        [](const Network& net, NodeId source, NodeId destination, std::size_t rho, std::size_t theta,
           const py::bytes& payload, const std::string& group, Seed key_seed, Seed seed,
           const std::vector<NodeId>& compromised, const std::string& capability,
           const std::string& selection) {
          const protocol::KeyDirectory keys(crypto::group_by_name(group), net.params.n, key_seed);
          protocol::SessionConfig cfg;
          cfg.source = source;
          cfg.destination = destination;
          cfg.rho = rho;
          cfg.theta = theta;
          cfg.payload = from_py(payload);
          cfg.selection = selection_by_name(selection);
          if (capability != "observe" && capability != "substitute") {
            throw py::value_error("capability must be observe or substitute");
          }
          adversary::CompromisedNodes adv(net.params.n, compromised,
                                          capability == "substitute"
                                              ? adversary::Capability::substitute_shares
                                              : adversary::Capability::observe);
          protocol::SessionReport r;
          {
            py::gil_scoped_release release;
            r = protocol::run_session(net, keys, cfg, compromised.empty() ? nullptr : &adv, seed);
          }
          auto d = report_dict(r);
          d["observed_messages"] = adv.transcript().size();
          return d;
        },
        py::arg("net"), py::arg("source"), py::arg("destination"), py::arg("rho") = 5,
        py::arg("theta") = 3, py::arg("payload") = py::bytes("kpsec"), py::arg("group") = "p256",
        py::arg("key_seed") = 1, py::arg("seed") = 1, py::arg("compromised") = std::vector<NodeId>{},
        py::arg("capability") = "observe", py::arg("selection") = "maximum-set");

  m.def("attack_sweep",
        [](std::size_t n, std::size_t k, std::size_t rho, double theta_ratio,
           const std::vector<double>& fractions, std::size_t trials, Seed seed, std::size_t jobs) {
          adversary::SweepConfig cfg;
          cfg.net.n = n;
          cfg.net.k = k;
          cfg.rho = rho;
          cfg.theta = adversary::Threshold::of_paths(theta_ratio);
          cfg.fractions = fractions;
          cfg.trials = trials;
          cfg.seed = seed;
          cfg.jobs = jobs;
          std::vector<adversary::SweepRow> rows;
          {
            py::gil_scoped_release release;
            rows = adversary::attack_sweep(cfg);
          }
          py::list out;
          for (const auto& r : rows) {
            py::dict d;
            d["fraction"] = r.fraction;
            d["trials"] = r.trials;
            d["mean_secure_paths"] = r.mean_secure_paths;
            d["std_secure_paths"] = r.std_secure_paths;
            d["attack_success_rate"] = r.attack_success_rate;
            out.append(d);
          }
          const auto crossing = adversary::crossing_fraction(rows);
          return py::make_tuple(out, crossing ? py::cast(*crossing) : py::none());
        },
        py::arg("n") = 200, py::arg("k") = 10, py::arg("rho") = 0, py::arg("theta_ratio") = 1.0,
        py::arg("fractions"), py::arg("trials") = 500, py::arg("seed") = 1, py::arg("jobs") = 1);

  m.def("cli",
        [](const std::vector<std::string>& args) {
          std::ostringstream out, err;
          const int status = cli::run(args, out, err);
          return py::make_tuple(status, out.str(), err.str());
        },
        py::arg("args"));
}
