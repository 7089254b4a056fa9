"""Closed-form analytics around the CHSH estimator: fidelity bounds, confidence
intervals, and sample-size calculators from Chebyshev and Hoeffding tails."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .quantum import TSIRELSON_BOUND

CHEBYSHEV = "chebyshev"
HOEFFDING = "hoeffding"


@dataclass(frozen=True)
class FidelityBounds:
    """Sandwich lower <= F(rho) <= upper implied by a CHSH value."""

    lower: float
    upper: float
    s_value: float


@dataclass(frozen=True)
class SamplePlan:
    """Per-setting sample count N (total measurements 4N) for a target (epsilon, delta)."""

    n_per_setting: int
    total: int
    method: str
    epsilon: float
    delta: float


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    confidence: float


def _check_epsilon_delta(epsilon: float, delta: float) -> None:
    if not 0.0 < epsilon < TSIRELSON_BOUND:
        raise ValueError(f"epsilon must be in (0, 2*sqrt(2)), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")


def fidelity_bounds_exact(s: float) -> FidelityBounds:
    """Exact bounds S/(2*sqrt(2)) <= F <= S/(4*sqrt(2)) + 1/2, clamped to [0, 1]."""
    if abs(s) > TSIRELSON_BOUND + 1e-9:
        raise ValueError(f"|s| = {abs(s)} exceeds the Tsirelson bound")
    lower = max(0.0, s / TSIRELSON_BOUND)
    upper = min(1.0, s / (2.0 * TSIRELSON_BOUND) + 0.5)
    return FidelityBounds(lower=lower, upper=upper, s_value=s)


def fidelity_interval_from_estimate(
    s_bar: float, epsilon: float, delta: float
) -> ConfidenceInterval:
    """Confidence interval for F(rho) from an estimate S_bar accurate to epsilon.

    lo = max(0, (S_bar - eps) / (2*sqrt(2)));
    hi = min((S_bar + eps) / (4*sqrt(2)) + 1/2, 1); holds with probability 1 - delta
    when the sample size came from the matching calculator.
    """
    if not 0.0 <= epsilon < TSIRELSON_BOUND:
        raise ValueError(f"epsilon must be in [0, 2*sqrt(2)), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    lo = max(0.0, (s_bar - epsilon) / TSIRELSON_BOUND)
    hi = min((s_bar + epsilon) / (2.0 * TSIRELSON_BOUND) + 0.5, 1.0)
    return ConfidenceInterval(lo=lo, hi=hi, confidence=1.0 - delta)


def _chebyshev_n(epsilon: float, delta: float, assume_nonlocal: bool) -> float:
    # Variance bound (4 - S^2/4)/N; S >= 2 for nonlocal states tightens 4 -> 3.
    constant = 3.0 if assume_nonlocal else 4.0
    return constant / (delta * epsilon * epsilon)


def _hoeffding_n(epsilon: float, delta: float) -> float:
    return (32.0 / (epsilon * epsilon)) * math.log(2.0 / (1.0 - (1.0 - delta) ** 0.25))


def sample_size_chebyshev(
    epsilon: float, delta: float, assume_nonlocal: bool = True
) -> SamplePlan:
    """N = ceil(3/(delta*eps^2)) for nonlocal states, ceil(4/(delta*eps^2)) otherwise."""
    _check_epsilon_delta(epsilon, delta)
    n = math.ceil(_chebyshev_n(epsilon, delta, assume_nonlocal))
    return SamplePlan(n, 4 * n, CHEBYSHEV, epsilon, delta)


def sample_size_hoeffding(epsilon: float, delta: float) -> SamplePlan:
    """N = ceil((32/eps^2) * ln(2 / (1 - (1-delta)^(1/4))))."""
    _check_epsilon_delta(epsilon, delta)
    n = math.ceil(_hoeffding_n(epsilon, delta))
    return SamplePlan(n, 4 * n, HOEFFDING, epsilon, delta)


def sample_size_optimal(epsilon: float, delta: float) -> SamplePlan:
    """Smaller of the Chebyshev (nonlocal) and Hoeffding counts; ties go to Chebyshev."""
    _check_epsilon_delta(epsilon, delta)
    cheb = _chebyshev_n(epsilon, delta, assume_nonlocal=True)
    hoef = _hoeffding_n(epsilon, delta)
    if cheb <= hoef:
        n, method = math.ceil(cheb), CHEBYSHEV
    else:
        n, method = math.ceil(hoef), HOEFFDING
    return SamplePlan(n, 4 * n, method, epsilon, delta)


def ev_sample_size(alpha: float, delta: float) -> SamplePlan:
    """Sample size of the gap-based verification test:
    N = min{3/(delta*alpha^2), (16/alpha^2) * ln(2/(1-(1-delta/2)^(1/4)))}."""
    if not 0.0 < alpha < 1.0 / 3.0:
        raise ValueError(f"alpha must be in (0, 1/3), got {alpha}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    cheb = 3.0 / (delta * alpha * alpha)
    hoef = (16.0 / (alpha * alpha)) * math.log(
        2.0 / (1.0 - (1.0 - delta / 2.0) ** 0.25)
    )
    if cheb <= hoef:
        n, method = math.ceil(cheb), CHEBYSHEV
    else:
        n, method = math.ceil(hoef), HOEFFDING
    return SamplePlan(n, 4 * n, method, alpha, delta)


def chebyshev_hoeffding_crossover(epsilon: float) -> float:
    """Failure budget delta* below which the Hoeffding count beats Chebyshev's.

    Root of 3/delta = 32 * ln(2/(1-(1-delta)^(1/4))); found by bracketed root
    search to 1e-8 (the epsilon^-2 factor cancels).
    """
    if not 0.0 < epsilon < TSIRELSON_BOUND:
        raise ValueError(f"epsilon must be in (0, 2*sqrt(2)), got {epsilon}")

    def gap(delta: float) -> float:
        return 3.0 / delta - 32.0 * math.log(2.0 / (1.0 - (1.0 - delta) ** 0.25))

    return float(brentq(gap, 1e-6, 0.5, xtol=1e-8))
