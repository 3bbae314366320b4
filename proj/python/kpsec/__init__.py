"""Key exchange over vertex-disjoint key-paths in sensor networks."""

from ._core import (
    FormatError,
    InsufficientShares,
    Network,
    NetworkParams,
    __version__,
    attack_sweep,
    cli,
    derive_seed,
    generate_network,
    monte_carlo_reliability,
    read_network,
    reconstruct_secret,
    reliability_analytic,
    run_session,
    share_secret,
)

__all__ = [
    "FormatError",
    "InsufficientShares",
    "Network",
    "NetworkParams",
    "__version__",
    "attack_sweep",
    "cli",
    "derive_seed",
    "generate_network",
    "monte_carlo_reliability",
    "read_network",
    "reconstruct_secret",
    "reliability_analytic",
    "run_session",
    "share_secret",
]
