"""Named plot-data presets. Each preset returns CSV text ready to write to disk;
the sweep presets reuse the harness CSV schema, the analytic presets carry their
own headers."""

from __future__ import annotations

import numpy as np

from .harness import ExperimentSpec, run_sweep, sweep_csv
from .netsim import NetworkConfig, NetworkPairSource, SimClock
from .protocols import estimate_chsh
from .stats import (
    fidelity_interval_from_estimate,
    sample_size_chebyshev,
    sample_size_hoeffding,
    sample_size_optimal,
)

# Sweep grids; single-parameter variations around the baseline configuration.
BETA_GRID = tuple(i / 10 for i in range(1, 8))            # 0.1 .. 0.7
DISTANCE_GRID = tuple(i / 2 for i in range(1, 7))         # 0.5 .. 3.0 km
DEPOLAR_GRID = (1000.0, 4000.0, 7000.0, 10000.0, 13000.0, 16000.0)
ALPHA_GRID = tuple(i / 100 for i in range(1, 21))         # 0.01 .. 0.20

_SWEEPS = {
    "fig4": ("beta", BETA_GRID),
    "fig5": ("distance", DISTANCE_GRID),
    "fig6": ("depolar_rate", DEPOLAR_GRID),
    "fig8": ("alpha", ALPHA_GRID),
}

FIGURE_NAMES = ("fig2", "fig4", "fig5", "fig6", "fig7", "fig8")


def sample_size_comparison_csv(epsilon: float = 0.05) -> str:
    """Chebyshev vs Hoeffding per-setting counts over delta in [0.001, 0.05]."""
    lines = ["delta,n_chebyshev,n_hoeffding"]
    for i in range(10, 501):
        delta = i / 10000
        cheb = sample_size_chebyshev(epsilon, delta).n_per_setting
        hoef = sample_size_hoeffding(epsilon, delta).n_per_setting
        lines.append(f"{delta:g},{cheb},{hoef}")
    return "\n".join(lines) + "\n"


def fidelity_bounds_vs_distance_csv(
    seed: int,
    epsilon: float = 0.05,
    delta: float = 0.05,
) -> str:
    """Measured CHSH value at each node distance with the implied fidelity
    interval, using the optimal sample plan for (epsilon, delta)."""
    n = sample_size_optimal(epsilon, delta).n_per_setting
    lines = ["distance_km,s_bar,fidelity_lower,fidelity_upper"]
    for k, distance in enumerate(np.arange(0.5, 3.01, 0.25)):
        rng = np.random.default_rng((seed, k))
        config = NetworkConfig(distance_km=float(distance))
        source = NetworkPairSource(config, SimClock(), rng)
        estimate = estimate_chsh(source, n, rng)
        interval = fidelity_interval_from_estimate(estimate.s_bar, epsilon, delta)
        lines.append(
            f"{distance:g},{estimate.s_bar:.6f},{interval.lo:.6f},{interval.hi:.6f}"
        )
    return "\n".join(lines) + "\n"


def figure_csv(
    name: str, seed: int = 0, repetitions: int = 200, jobs: int = 1
) -> str:
    """Render a named preset to CSV text; deterministic for a given seed."""
    if name == "fig2":
        return sample_size_comparison_csv()
    if name == "fig7":
        return fidelity_bounds_vs_distance_csv(seed)
    if name in _SWEEPS:
        param, grid = _SWEEPS[name]
        spec = ExperimentSpec(
            seed=seed,
            repetitions=repetitions,
            sweep_param=param,
            sweep_values=grid,
        )
        return sweep_csv(param, run_sweep(spec, jobs=jobs), seed)
    raise ValueError(f"unknown figure preset {name!r}; expected one of {FIGURE_NAMES}")
