"""Exact two-qubit state algebra: Bell states, CHSH observables, noise channels,
fidelity, and Born-rule outcome sampling.

Conventions
-----------
Qubit ordering is Alice-first: a two-qubit operator is ``kron(alice_op, bob_op)``
and basis states are ``|alice bob>``. All states and observables are plain
complex numpy arrays; the validators below enforce the physical invariants.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Tolerances: exact-algebra identities vs. accumulated floating-point slack
# in eigenvalues after channel compositions.
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
PROB_CLAMP_TOL = 1e-10

TSIRELSON_BOUND = 2.0 * np.sqrt(2.0)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

# Bell basis |Phi+>, |Phi->, |Psi+>, |Psi-> as column vectors.
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2.0)
PHI_MINUS = np.array([1, 0, 0, -1], dtype=complex) / np.sqrt(2.0)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2.0)
PSI_MINUS = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2.0)
BELL_BASIS = (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)

# Joint measurement outcomes in a fixed order; sampling indexes into this.
OUTCOME_PAIRS = ((+1, +1), (+1, -1), (-1, +1), (-1, -1))


class InvalidStateError(ValueError):
    """A 4x4 matrix failed the density-matrix invariants."""


class InvalidObservableError(ValueError):
    """A 2x2 matrix is not a Hermitian dichotomic (+/-1) observable."""


@dataclass(frozen=True)
class MeasurementOutcome:
    """One joint measurement record: Alice's and Bob's +/-1 outcomes at setting (i, j)."""

    a: int
    b: int
    setting: tuple[int, int]


def validate_state(rho: np.ndarray) -> np.ndarray:
    """Check Hermiticity, unit trace and positive semidefiniteness of a 4x4 state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidStateError(f"expected 4x4 matrix, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=HERMITIAN_TOL, rtol=0):
        raise InvalidStateError("state is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > 1e-10:
        raise InvalidStateError(f"trace is {tr}, expected 1")
    min_eig = float(np.linalg.eigvalsh(rho)[0])
    if min_eig < -PSD_TOL:
        raise InvalidStateError(f"minimum eigenvalue {min_eig} below -{PSD_TOL}")
    return rho


def validate_qubit_state(sigma: np.ndarray) -> np.ndarray:
    """Same invariants as :func:`validate_state` for a single-qubit 2x2 state."""
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (2, 2):
        raise InvalidStateError(f"expected 2x2 matrix, got shape {sigma.shape}")
    if not np.allclose(sigma, sigma.conj().T, atol=HERMITIAN_TOL, rtol=0):
        raise InvalidStateError("state is not Hermitian")
    if abs(np.trace(sigma) - 1.0) > 1e-10:
        raise InvalidStateError("trace differs from 1")
    if float(np.linalg.eigvalsh(sigma)[0]) < -PSD_TOL:
        raise InvalidStateError("state is not positive semidefinite")
    return sigma


def validate_observable(obs: np.ndarray) -> np.ndarray:
    """Check that ``obs`` is 2x2 Hermitian and squares to the identity."""
    obs = np.asarray(obs, dtype=complex)
    if obs.shape != (2, 2):
        raise InvalidObservableError(f"expected 2x2 matrix, got shape {obs.shape}")
    if not np.allclose(obs, obs.conj().T, atol=HERMITIAN_TOL, rtol=0):
        raise InvalidObservableError("observable is not Hermitian")
    if not np.allclose(obs @ obs, IDENTITY_2, atol=HERMITIAN_TOL, rtol=0):
        raise InvalidObservableError("observable does not square to the identity")
    return obs


def bell_state_phi_plus() -> np.ndarray:
    """Density matrix of the ideal EPR pair |Phi+><Phi+|."""
    return np.outer(PHI_PLUS, PHI_PLUS.conj())


def maximally_mixed() -> np.ndarray:
    return np.eye(4, dtype=complex) / 4.0


def werner_state(w: float) -> np.ndarray:
    """Mixture w|Phi+><Phi+| + (1-w) I/4.

    Closed forms used throughout the tests: S = 2*sqrt(2)*w and
    F = w + (1-w)/4.
    """
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"mixing weight must be in [0, 1], got {w}")
    return w * bell_state_phi_plus() + (1.0 - w) * maximally_mixed()


def standard_observables() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """The fixed optimal CHSH settings (A0, A1, B0, B1).

    A0 = sigma_x, A1 = sigma_z, B0 = (sigma_x + sigma_z)/sqrt(2),
    B1 = (sigma_x - sigma_z)/sqrt(2).
    """
    root2 = np.sqrt(2.0)
    return (
        SIGMA_X.copy(),
        SIGMA_Z.copy(),
        (SIGMA_X + SIGMA_Z) / root2,
        (SIGMA_X - SIGMA_Z) / root2,
    )


@lru_cache(maxsize=1)
def _chsh_operator_cached() -> np.ndarray:
    a0, a1, b0, b1 = standard_observables()
    op = np.kron(a0, b0) + np.kron(a1, b0) + np.kron(a0, b1) - np.kron(a1, b1)
    op.setflags(write=False)
    return op


def chsh_operator() -> np.ndarray:
    """The 4x4 CHSH operator A0xB0 + A1xB0 + A0xB1 - A1xB1.

    With the standard observables it is Bell-diagonal:
    2*sqrt(2) * (|Phi+><Phi+| - |Psi-><Psi-|).
    """
    return _chsh_operator_cached()


def chsh_expectation(rho: np.ndarray) -> float:
    """S(rho) = Tr[S_hat rho], a real number in [-2*sqrt(2), 2*sqrt(2)]."""
    rho = validate_state(rho)
    value = np.trace(chsh_operator() @ rho)
    if abs(value.imag) > 1e-10:
        raise InvalidStateError(f"CHSH expectation has imaginary residue {value.imag}")
    return float(value.real)


def entanglement_fidelity(rho: np.ndarray) -> float:
    """F(rho) = <Phi+| rho |Phi+>."""
    rho = validate_state(rho)
    value = PHI_PLUS.conj() @ rho @ PHI_PLUS
    if abs(value.imag) > 1e-10:
        raise InvalidStateError(f"fidelity has imaginary residue {value.imag}")
    return float(value.real)


def partial_trace(rho: np.ndarray, keep: str) -> np.ndarray:
    """Trace out one qubit of a two-qubit state, keeping ``"alice"`` or ``"bob"``."""
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if keep == "alice":
        return np.einsum("ijkj->ik", r)
    if keep == "bob":
        return np.einsum("ijil->jl", r)
    raise ValueError(f"keep must be 'alice' or 'bob', got {keep!r}")


def depolarize_one_qubit(rho: np.ndarray, which: str, p: float) -> np.ndarray:
    """Depolarize one side: rho -> (1-p) rho + p (reduced other side) x I/2.

    ``which`` names the qubit the noise acts on ("alice" or "bob").
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarization probability must be in [0, 1], got {p}")
    rho = validate_state(rho)
    if which == "alice":
        mixed = np.kron(IDENTITY_2 / 2.0, partial_trace(rho, keep="bob"))
    elif which == "bob":
        mixed = np.kron(partial_trace(rho, keep="alice"), IDENTITY_2 / 2.0)
    else:
        raise ValueError(f"which must be 'alice' or 'bob', got {which!r}")
    return (1.0 - p) * rho + p * mixed


def _eigenprojectors(obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(+1, -1) eigenprojectors of a dichotomic observable."""
    vals, vecs = np.linalg.eigh(obs)
    if not (abs(vals[0] + 1.0) < 1e-9 and abs(vals[1] - 1.0) < 1e-9):
        raise InvalidObservableError(f"eigenvalues {vals} are not -1/+1")
    v_minus = vecs[:, 0]
    v_plus = vecs[:, 1]
    return np.outer(v_plus, v_plus.conj()), np.outer(v_minus, v_minus.conj())


def joint_outcome_probabilities(
    rho: np.ndarray, a_obs: np.ndarray, b_obs: np.ndarray
) -> np.ndarray:
    """Born-rule probabilities of the four (a, b) outcomes in OUTCOME_PAIRS order.

    Numerical noise below PROB_CLAMP_TOL is clamped to zero and the vector is
    renormalized; larger negatives signal a bug and raise.
    """
    rho = validate_state(rho)
    a_plus, a_minus = _eigenprojectors(validate_observable(a_obs))
    b_plus, b_minus = _eigenprojectors(validate_observable(b_obs))
    probs = np.array(
        [
            np.trace(rho @ np.kron(pa, pb)).real
            for pa in (a_plus, a_minus)
            for pb in (b_plus, b_minus)
        ]
    )
    if probs.min() < -PROB_CLAMP_TOL:
        raise InvalidStateError(f"outcome probability {probs.min()} below clamp threshold")
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_joint_outcomes(
    rho: np.ndarray,
    a_obs: np.ndarray,
    b_obs: np.ndarray,
    count: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``count`` i.i.d. joint outcomes; returns (a, b) arrays of +/-1 ints."""
    probs = joint_outcome_probabilities(rho, a_obs, b_obs)
    idx = rng.choice(4, size=count, p=probs)
    pairs = np.array(OUTCOME_PAIRS)
    return pairs[idx, 0], pairs[idx, 1]


def sample_joint_outcome(
    rho: np.ndarray,
    a_obs: np.ndarray,
    b_obs: np.ndarray,
    rng: np.random.Generator,
    setting: tuple[int, int] = (0, 0),
) -> MeasurementOutcome:
    """Sample a single joint outcome from the Born distribution."""
    a, b = sample_joint_outcomes(rho, a_obs, b_obs, 1, rng)
    return MeasurementOutcome(a=int(a[0]), b=int(b[0]), setting=setting)


def random_mixed_state(rng: np.random.Generator, n_pure: int = 4) -> np.ndarray:
    """Random valid state: Dirichlet mixture of normalized complex Gaussian kets.

    Adequate for property testing; not claimed Haar-exact.
    """
    weights = rng.dirichlet(np.ones(n_pure))
    rho = np.zeros((4, 4), dtype=complex)
    for w in weights:
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        v /= np.linalg.norm(v)
        rho += w * np.outer(v, v.conj())
    return rho
