"""Executable verification protocols: CHSH estimation over a pair source and
the two threshold tests on the estimate (gap-based EV and practical PEV)."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .quantum import (
    MeasurementOutcome,
    OUTCOME_PAIRS,
    TSIRELSON_BOUND,
    joint_outcome_probabilities,
    standard_observables,
    validate_state,
)
from .stats import SamplePlan, ev_sample_size

# Settings are consumed in this fixed order; the (1,1) term enters with a minus sign.
SETTING_ORDER = ((0, 0), (1, 0), (0, 1), (1, 1))

ACCEPT_H0 = "accept_h0"
REJECT_H1 = "reject_h1"


class SourceExhaustedError(RuntimeError):
    """The pair source could not supply the requested number of pairs."""


class PairSource(ABC):
    """Provider of successive EPR-pair states; each pair is handed out once."""

    def __init__(self) -> None:
        self._consumed = 0

    @property
    def consumed(self) -> int:
        """Number of pairs handed out so far."""
        return self._consumed

    @abstractmethod
    def _next_states(self, count: int) -> list[np.ndarray]:
        """Produce the next ``count`` pair states, raising SourceExhaustedError if short."""

    def take_states(self, count: int) -> list[np.ndarray]:
        states = self._next_states(count)
        self._consumed += len(states)
        return states


class FixedStateSource(PairSource):
    """I.i.d. copies of a single state, optionally capped at ``limit`` pairs."""

    def __init__(self, state: np.ndarray, limit: Optional[int] = None) -> None:
        super().__init__()
        self._state = validate_state(state)
        self._state.setflags(write=False)
        self._limit = limit

    def _next_states(self, count: int) -> list[np.ndarray]:
        if self._limit is not None and self.consumed + count > self._limit:
            raise SourceExhaustedError(
                f"requested {count} pairs but only "
                f"{self._limit - self.consumed} remain"
            )
        return [self._state] * count


class ListPairSource(PairSource):
    """Pairs drawn in order from a pre-generated list of states."""

    def __init__(self, states: list[np.ndarray]) -> None:
        super().__init__()
        self._states = list(states)

    def _next_states(self, count: int) -> list[np.ndarray]:
        if self.consumed + count > len(self._states):
            raise SourceExhaustedError(
                f"requested {count} pairs but only "
                f"{len(self._states) - self.consumed} remain"
            )
        return self._states[self.consumed : self.consumed + count]


@dataclass(frozen=True)
class ChshEstimate:
    """Empirical CHSH value with its per-setting correlation terms."""

    s_bar: float
    terms: dict[tuple[int, int], float]
    n_per_setting: int
    outcome_log: Optional[list[MeasurementOutcome]] = None


@dataclass(frozen=True)
class VerificationOutcome:
    decision: str  # ACCEPT_H0 or REJECT_H1
    threshold: float
    estimate: ChshEstimate
    protocol: str  # "ev" or "pev"
    params: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT_H0


def _measure_setting(
    states: list[np.ndarray],
    a_obs: np.ndarray,
    b_obs: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Measure each state once; contiguous runs of the identical state object are
    sampled in one vectorized draw (the outcome distribution is per-state)."""
    a_out = np.empty(len(states), dtype=np.int64)
    b_out = np.empty(len(states), dtype=np.int64)
    pairs = np.array(OUTCOME_PAIRS)
    start = 0
    while start < len(states):
        stop = start + 1
        while stop < len(states) and states[stop] is states[start]:
            stop += 1
        probs = joint_outcome_probabilities(states[start], a_obs, b_obs)
        idx = rng.choice(4, size=stop - start, p=probs)
        a_out[start:stop] = pairs[idx, 0]
        b_out[start:stop] = pairs[idx, 1]
        start = stop
    return a_out, b_out


def estimate_chsh(
    source: PairSource,
    n: int,
    rng: np.random.Generator,
    log_outcomes: bool = False,
) -> ChshEstimate:
    """Measure n pairs per setting (4n total) and form
    S_bar = A0B0 + A1B0 + A0B1 - A1B1 from the empirical correlators.

    Settings run in the fixed order (0,0), (1,0), (0,1), (1,1); the estimator
    is unbiased: E[S_bar] = S(rho) for an i.i.d. source.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    a0, a1, b0, b1 = standard_observables()
    observables = {0: (a0, a1), 1: (b0, b1)}
    terms: dict[tuple[int, int], float] = {}
    log: Optional[list[MeasurementOutcome]] = [] if log_outcomes else None
    for i, j in SETTING_ORDER:
        states = source.take_states(n)
        a_out, b_out = _measure_setting(states, observables[0][i], observables[1][j], rng)
        terms[(i, j)] = float(np.mean(a_out * b_out))
        if log is not None:
            log.extend(
                MeasurementOutcome(int(a), int(b), (i, j))
                for a, b in zip(a_out, b_out)
            )
    s_bar = terms[(0, 0)] + terms[(1, 0)] + terms[(0, 1)] - terms[(1, 1)]
    return ChshEstimate(s_bar=s_bar, terms=terms, n_per_setting=n, outcome_log=log)


def ev_threshold(alpha: float) -> float:
    """Acceptance threshold of the gap-based test: 2*sqrt(2) - 5*sqrt(2)*alpha."""
    return TSIRELSON_BOUND - 5.0 * math.sqrt(2.0) * alpha


def pev_threshold(alpha: float) -> float:
    """Acceptance threshold of the practical test: 2*sqrt(2) - (5*sqrt(2)/3)*alpha."""
    return TSIRELSON_BOUND - (5.0 * math.sqrt(2.0) / 3.0) * alpha


def verify_ev(
    source: PairSource,
    alpha: float,
    delta: float,
    rng: np.random.Generator,
    log_outcomes: bool = False,
) -> VerificationOutcome:
    """Gap-based entanglement verification.

    Distinguishes H0: F >= 1-alpha from H1: F <= 1-3*alpha with error
    probability at most delta, by comparing S_bar (at the calculated sample
    size) against the threshold 2*sqrt(2) - 5*sqrt(2)*alpha.
    """
    plan = ev_sample_size(alpha, delta)  # validates alpha, delta ranges
    estimate = estimate_chsh(source, plan.n_per_setting, rng, log_outcomes)
    threshold = ev_threshold(alpha)
    decision = ACCEPT_H0 if estimate.s_bar >= threshold else REJECT_H1
    return VerificationOutcome(
        decision=decision,
        threshold=threshold,
        estimate=estimate,
        protocol="ev",
        params={"alpha": alpha, "delta": delta, "n_per_setting": plan.n_per_setting,
                "method": plan.method},
    )


def verify_pev(
    source: PairSource,
    n: int,
    alpha: float,
    rng: np.random.Generator,
    log_outcomes: bool = False,
) -> VerificationOutcome:
    """Practical verification at a caller-chosen sample size.

    Tests H0: F >= 1-alpha against H1: F < 1-alpha via the threshold
    2*sqrt(2) - (5*sqrt(2)/3)*alpha, consuming 4n pairs.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    estimate = estimate_chsh(source, n, rng, log_outcomes)
    threshold = pev_threshold(alpha)
    decision = ACCEPT_H0 if estimate.s_bar >= threshold else REJECT_H1
    return VerificationOutcome(
        decision=decision,
        threshold=threshold,
        estimate=estimate,
        protocol="pev",
        params={"alpha": alpha, "n_per_setting": n},
    )


def ev_error_bound(n: int, alpha: float) -> float:
    """Closed-form bound on the gap-based test's error probability at sample size n.

    Minimum of the Hoeffding form 2*[1 - (1 - 2*exp(-n*alpha^2/16))^4] and the
    Chebyshev form 3/(n*alpha^2), clamped to [0, 1] (the Hoeffding expression
    exceeds 1 for tiny n).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < alpha < 1.0 / 3.0:
        raise ValueError(f"alpha must be in (0, 1/3), got {alpha}")
    # The per-term tail 2*exp(...) is vacuous above 1; cap it so the fourth
    # power cannot turn a useless bound into a spuriously small one.
    per_term = min(1.0, 2.0 * math.exp(-n * alpha * alpha / 16.0))
    hoeffding = 2.0 * (1.0 - (1.0 - per_term) ** 4)
    chebyshev = 3.0 / (n * alpha * alpha)
    return float(min(1.0, max(0.0, min(hoeffding, chebyshev))))
