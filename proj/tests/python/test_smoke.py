import os
import subprocess

import pytest

import kpsec


def test_version():
    assert kpsec.__version__ == "0.1.0"


def test_reliability_value():
    assert kpsec.reliability_analytic(0.1, 3, 5) == pytest.approx(0.998538, abs=1e-6)
    mean, stderr, trials = kpsec.monte_carlo_reliability(0.1, 3, 5, 20000, seed=3)
    assert trials == 20000
    assert abs(mean - 0.998538) <= 4 * stderr


def test_network_round_trip():
    net = kpsec.generate_network(kpsec.NetworkParams(n=40, k=4, seed=7))
    assert net.params.n == 40
    assert len(net.positions) == 40
    assert all(len(ring) == 4 for ring in net.keyrings)
    again = kpsec.read_network(net.to_text())
    assert again.to_text() == net.to_text()


def test_disjoint_paths_are_disjoint():
    net = kpsec.generate_network(kpsec.NetworkParams(n=100, k=10, seed=2))
    paths = net.disjoint_paths(0, 1)
    seen = set()
    for p in paths:
        assert p[0] == 0 and p[-1] == 1
        mid = set(p[1:-1])
        assert not (mid & seen)
        seen |= mid
    assert len(net.disjoint_paths(0, 1, limit=2)) == min(2, len(paths))


def test_sharing_round_trip():
    secret = bytes(range(40))
    shares = kpsec.share_secret(secret, 3, 5, seed=9)
    assert len(shares) == 5
    assert kpsec.reconstruct_secret(shares[2:], 3, len(secret)) == secret
    with pytest.raises(kpsec.InsufficientShares):
        kpsec.reconstruct_secret(shares[:2], 3, len(secret))
    with pytest.raises(kpsec.FormatError):
        kpsec.reconstruct_secret([b"\x00"], 1, len(secret))


def _pair_with_paths(net, rho):
    for s in range(net.params.n):
        for d in range(net.params.n):
            if s != d and len(net.disjoint_paths(s, d)) >= rho:
                return s, d
    raise AssertionError("no pair")


def test_honest_session():
    net = kpsec.generate_network(kpsec.NetworkParams(n=100, k=10, seed=3))
    s, d = _pair_with_paths(net, 5)
    r = kpsec.run_session(net, s, d, rho=5, theta=3, group="toy", seed=4)
    assert r["success"], r["reason"]
    assert r["data_path_de_steps"] == 0
    assert len(r["de_steps_per_path"]) == 5


def test_substituting_adversary_everywhere():
    net = kpsec.generate_network(kpsec.NetworkParams(n=60, k=6, seed=5))
    s, d = _pair_with_paths(net, 3)
    others = [v for v in range(60) if v not in (s, d)]
    r = kpsec.run_session(net, s, d, rho=3, theta=2, seed=1, compromised=others,
                          capability="substitute")
    paths = net.disjoint_paths(s, d)[:3]
    relayed = sum(1 for p in paths if len(p) > 2)
    assert r["forged_key_verified"] == (relayed >= 2)


def test_attack_sweep():
    rows, crossing = kpsec.attack_sweep(n=80, k=6, theta_ratio=0.5,
                                        fractions=[0.0, 0.3, 0.9], trials=60)
    rates = [row["attack_success_rate"] for row in rows]
    assert rates[0] == 0.0
    assert rates == sorted(rates)
    assert crossing is None or crossing in (0.3, 0.9)


def test_cli_binding_and_binary(tmp_path):
    status, out, err = kpsec.cli(["reliability", "--trials", "0", "--p", "0.1", "--de", "3",
                                  "--rho", "5"])
    assert status == 0, err
    assert out.splitlines()[-1].startswith("0.1,3,5,0.998538")
    status, _, err = kpsec.cli(["topo", "--n", "1"])
    assert status != 0 and err.startswith("kpsec-sim: error:")

    exe = os.environ.get("KPSEC_SIM")
    if not exe:
        pytest.skip("kpsec-sim binary not provided")
    out_file = tmp_path / "net.txt"
    proc = subprocess.run([exe, "topo", "--n", "30", "--k", "3", "--out", str(out_file)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out_file.read_text().splitlines()[1] == "30 3 300.000000 100.000000 1"
