"""Monte-Carlo experiment orchestration: repeated practical-verification runs over
the simulated link, ground-truth adjudication on the reserved pairs, FPR/FNR/
success-rate aggregation, and single-parameter sweeps with CSV output."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .netsim import NetworkConfig, NetworkPairSource, SimClock, StoredPair
from .protocols import PairSource, VerificationOutcome, verify_pev
from .quantum import entanglement_fidelity, validate_state
from .teleport import teleport_report

H0 = "H0"
H1 = "H1"

SWEEP_PARAMS = ("beta", "distance", "depolar_rate", "alpha")

CSV_HEADER = (
    "param,value,success_rate,fpr,fnr,mean_fidelity,"
    "mean_teleport_fidelity,accepts,rejects,reps,seed"
)

# SplitMix64 mixing constants; repetition seeds are mix64(seed + index).
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


def mix_seed(seed: int, index: int) -> int:
    """Deterministic 64-bit seed for repetition ``index`` of a base seed."""
    z = (seed + (index + 1) * _SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: link parameters plus the verification/resource split."""

    network: NetworkConfig = NetworkConfig()
    capacity: int = 10_000
    beta: float = 0.3
    alpha: float = 0.1
    delta: float = 0.1
    repetitions: int = 200
    seed: int = 0
    sweep_param: Optional[str] = None
    sweep_values: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if self.repetitions < 1:
            raise ValueError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.sweep_param is not None and self.sweep_param not in SWEEP_PARAMS:
            raise ValueError(
                f"unknown sweep parameter {self.sweep_param!r}; "
                f"expected one of {SWEEP_PARAMS}"
            )

    @property
    def n_per_setting(self) -> int:
        return math.floor(self.beta * self.capacity / 4.0)

    def manifest(self) -> dict:
        """Fully resolved spec as a JSON-serializable dict, for provenance."""
        data = asdict(self)
        data["network"] = asdict(self.network)
        data["n_per_setting"] = self.n_per_setting
        return data


@dataclass(frozen=True)
class RunResult:
    """Outcome of a single repetition with its ground truth."""

    outcome: VerificationOutcome
    ground_truth: str  # H0 or H1
    remaining_mean_fidelity: float
    post_teleport_fidelity: float  # nan when the run rejected


@dataclass(frozen=True)
class RunMetrics:
    success_rate: float
    fpr: float
    fnr: float
    mean_remaining_fidelity: float
    mean_post_teleport_fidelity: float  # over accepted runs; nan if none accepted
    accept_count: int
    reject_count: int
    h0_true_count: int
    repetitions: int


class SyntheticPairStore(PairSource):
    """Drop-in replacement for the simulated link: i.i.d. copies of one state,
    exposing the same take_pairs/generate surface the harness consumes."""

    def __init__(self, state: np.ndarray) -> None:
        super().__init__()
        self._state = validate_state(state)
        self._state.setflags(write=False)

    def generate(self, count: int) -> None:
        pass  # pairs are synthesized on demand

    def take_pairs(self, count: int) -> list[StoredPair]:
        first = self._consumed
        self._consumed += count
        return [
            StoredPair(
                pair_id=first + i,
                state=self._state,
                created_at=0.0,
                alice_slot=first + i,
                bob_slot=first + i,
            )
            for i in range(count)
        ]

    def _next_states(self, count: int) -> list[np.ndarray]:
        return [self._state] * count


def _network_store(spec: ExperimentSpec, rng: np.random.Generator):
    return NetworkPairSource(spec.network, SimClock(), rng, capacity=spec.capacity)


def run_once(spec: ExperimentSpec, seed: int, store_factory=None) -> RunResult:
    """One repetition: generate the full pair budget, verify on the sampled
    fraction, adjudicate on the exact mean fidelity of the reserved pairs, and
    (on acceptance) teleport through them.

    ``store_factory(spec, rng)`` may replace the simulated link with any pair
    store (e.g. :class:`SyntheticPairStore`)."""
    n = spec.n_per_setting
    if n < 1:
        raise ValueError(
            f"beta={spec.beta} with capacity={spec.capacity} leaves no samples"
        )
    remaining_count = spec.capacity - 4 * n
    if remaining_count < 1:
        raise ValueError(
            f"beta={spec.beta} with capacity={spec.capacity} leaves no pairs "
            "for teleportation"
        )

    rng = np.random.default_rng(seed)
    source = (store_factory or _network_store)(spec, rng)
    source.generate(spec.capacity)

    outcome = verify_pev(source, n, spec.alpha, rng)
    remaining = source.take_pairs(remaining_count)

    fidelity_cache: dict[int, float] = {}
    for pair in remaining:
        key = id(pair.state)
        if key not in fidelity_cache:
            fidelity_cache[key] = entanglement_fidelity(pair.state)
    mean_f = float(np.mean([fidelity_cache[id(p.state)] for p in remaining]))
    ground_truth = H0 if mean_f >= 1.0 - spec.alpha else H1

    if outcome.accepted:
        post_f = teleport_report(remaining).average_fidelity
    else:
        post_f = float("nan")
    return RunResult(outcome, ground_truth, mean_f, post_f)


def _run_rep(args) -> RunResult:
    spec, rep_seed, store_factory = args
    return run_once(spec, rep_seed, store_factory)


def run_experiment(spec: ExperimentSpec, jobs: int = 1, store_factory=None) -> RunMetrics:
    """Aggregate ``spec.repetitions`` independent runs into error rates.

    FPR counts accepts under H1, FNR rejects under H0; the success rate is the
    complement, so the three always partition the repetitions exactly.
    Repetition seeds are derived from ``spec.seed``, so results do not depend
    on ``jobs``.
    """
    tasks = [
        (spec, mix_seed(spec.seed, i), store_factory)
        for i in range(spec.repetitions)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_rep, tasks, chunksize=8))
    else:
        results = [_run_rep(t) for t in tasks]
    return summarize(results)


def summarize(results: Sequence[RunResult]) -> RunMetrics:
    reps = len(results)
    false_pos = sum(1 for r in results if r.outcome.accepted and r.ground_truth == H1)
    false_neg = sum(
        1 for r in results if not r.outcome.accepted and r.ground_truth == H0
    )
    accepts = sum(1 for r in results if r.outcome.accepted)
    post = [r.post_teleport_fidelity for r in results if r.outcome.accepted]
    return RunMetrics(
        success_rate=(reps - false_pos - false_neg) / reps,
        fpr=false_pos / reps,
        fnr=false_neg / reps,
        mean_remaining_fidelity=float(
            np.mean([r.remaining_mean_fidelity for r in results])
        ),
        mean_post_teleport_fidelity=float(np.mean(post)) if post else float("nan"),
        accept_count=accepts,
        reject_count=reps - accepts,
        h0_true_count=sum(1 for r in results if r.ground_truth == H0),
        repetitions=reps,
    )


def apply_sweep_value(spec: ExperimentSpec, param: str, value: float) -> ExperimentSpec:
    if param == "beta":
        return replace(spec, beta=value)
    if param == "alpha":
        return replace(spec, alpha=value)
    if param == "distance":
        return replace(spec, network=replace(spec.network, distance_km=value))
    if param == "depolar_rate":
        return replace(
            spec, network=replace(spec.network, channel_depolar_rate_hz=value)
        )
    raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")


def run_sweep(spec: ExperimentSpec, jobs: int = 1) -> list[tuple[float, RunMetrics]]:
    """Run one experiment per sweep value, everything else held at the spec's
    values; output ordered by grid value."""
    if spec.sweep_param is None or not spec.sweep_values:
        raise ValueError("spec has no sweep parameter or values")
    out = []
    for value in sorted(spec.sweep_values):
        point_spec = apply_sweep_value(spec, spec.sweep_param, value)
        out.append((value, run_experiment(point_spec, jobs=jobs)))
    return out


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def sweep_csv(
    param: str, results: Sequence[tuple[float, RunMetrics]], seed: int
) -> str:
    """Render sweep results with the fixed CSV header; one row per grid value."""
    lines = [CSV_HEADER]
    for value, m in results:
        lines.append(
            ",".join(
                [
                    param,
                    f"{value:g}",
                    _fmt(m.success_rate),
                    _fmt(m.fpr),
                    _fmt(m.fnr),
                    _fmt(m.mean_remaining_fidelity),
                    _fmt(m.mean_post_teleport_fidelity),
                    str(m.accept_count),
                    str(m.reject_count),
                    str(m.repetitions),
                    str(seed),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def optimal_beta(
    results: Sequence[tuple[float, RunMetrics]], delta: float
) -> Optional[float]:
    """Smallest swept beta whose success rate reaches 1 - delta, if any."""
    for value, metrics in results:
        if metrics.success_rate >= 1.0 - delta:
            return value
    return None
