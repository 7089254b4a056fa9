"""Request/response models for the verification service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class NetworkParams(BaseModel):
    """Mirror of the simulator's link configuration; all fields optional with
    the baseline defaults."""

    distance_km: float = 1.0
    channel_depolar_rate_hz: float = 8000.0
    fiber_speed_km_per_s: float = 2e5
    attenuation_length_km: float = 20.0
    memory_depolar_rate_hz: float = 0.0
    attempt_rate_hz: float = 1e6
    classical_speed_km_per_s: float = 2e5


class PlanRequest(BaseModel):
    epsilon: float
    delta: float
    method: Optional[Literal["chebyshev", "hoeffding"]] = None


class PlanResponse(BaseModel):
    method: str
    n_per_setting: int
    total: int
    epsilon: float
    delta: float


class BoundsRequest(BaseModel):
    s_bar: float
    epsilon: float
    delta: float


class BoundsResponse(BaseModel):
    lo: float
    hi: float
    confidence: float


class VerifyRequest(BaseModel):
    protocol: Literal["ev", "pev"] = "pev"
    alpha: float
    delta: Optional[float] = None  # required for ev
    n: Optional[int] = None  # required for pev
    seed: int = 0
    network: NetworkParams = Field(default_factory=NetworkParams)


class VerifyResponse(BaseModel):
    decision: str
    accepted: bool
    protocol: str
    threshold: float
    s_bar: float
    terms: dict[str, float]
    n_per_setting: int
    pairs_consumed: int
    fidelity_lower: float
    fidelity_upper: float


class SweepRequest(BaseModel):
    param: Literal["beta", "distance", "depolar_rate", "alpha"]
    values: list[float]
    capacity: int = 10_000
    beta: float = 0.3
    alpha: float = 0.1
    delta: float = 0.1
    repetitions: int = 200
    seed: int = 0
    jobs: int = 1
    network: NetworkParams = Field(default_factory=NetworkParams)


class SweepResponse(BaseModel):
    csv: str
    manifest: dict


class FigureRequest(BaseModel):
    name: Literal["fig2", "fig4", "fig5", "fig6", "fig7", "fig8"]
    seed: int = 0
    repetitions: int = 200
    jobs: int = 1


class FigureResponse(BaseModel):
    csv: str
