"""FastAPI surface over the certification toolkit. The CLI is a thin client of
these endpoints; they are also usable as a standalone service."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..figures import figure_csv
from ..harness import ExperimentSpec, run_sweep, sweep_csv
from ..netsim import NetworkConfig, NetworkPairSource, SimClock
from ..protocols import verify_ev, verify_pev
from ..quantum import TSIRELSON_BOUND
from ..stats import (
    fidelity_bounds_exact,
    fidelity_interval_from_estimate,
    sample_size_chebyshev,
    sample_size_hoeffding,
    sample_size_optimal,
)
from .schemas import (
    BoundsRequest,
    BoundsResponse,
    FigureRequest,
    FigureResponse,
    NetworkParams,
    PlanRequest,
    PlanResponse,
    SweepRequest,
    SweepResponse,
    VerifyRequest,
    VerifyResponse,
)


def _network_config(params: NetworkParams) -> NetworkConfig:
    return NetworkConfig(**params.model_dump())


def create_app() -> FastAPI:
    app = FastAPI(title="chsh-verify", version=__version__)

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/plan", response_model=PlanResponse)
    def plan(req: PlanRequest) -> PlanResponse:
        if req.method == "chebyshev":
            p = sample_size_chebyshev(req.epsilon, req.delta)
        elif req.method == "hoeffding":
            p = sample_size_hoeffding(req.epsilon, req.delta)
        else:
            p = sample_size_optimal(req.epsilon, req.delta)
        return PlanResponse(
            method=p.method,
            n_per_setting=p.n_per_setting,
            total=p.total,
            epsilon=p.epsilon,
            delta=p.delta,
        )

    @app.post("/bounds", response_model=BoundsResponse)
    def bounds(req: BoundsRequest) -> BoundsResponse:
        ci = fidelity_interval_from_estimate(req.s_bar, req.epsilon, req.delta)
        return BoundsResponse(lo=ci.lo, hi=ci.hi, confidence=ci.confidence)

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest) -> VerifyResponse:
        rng = np.random.default_rng(req.seed)
        source = NetworkPairSource(_network_config(req.network), SimClock(), rng)
        if req.protocol == "ev":
            if req.delta is None:
                raise ValueError("protocol 'ev' requires delta")
            outcome = verify_ev(source, req.alpha, req.delta, rng)
        else:
            if req.n is None:
                raise ValueError("protocol 'pev' requires n")
            outcome = verify_pev(source, req.n, req.alpha, rng)
        # S_bar can overshoot the Tsirelson bound by sampling noise; clamp it
        # before converting to fidelity bounds.
        s_clamped = max(-TSIRELSON_BOUND, min(TSIRELSON_BOUND, outcome.estimate.s_bar))
        fb = fidelity_bounds_exact(s_clamped)
        return VerifyResponse(
            decision=outcome.decision,
            accepted=outcome.accepted,
            protocol=outcome.protocol,
            threshold=outcome.threshold,
            s_bar=outcome.estimate.s_bar,
            terms={f"{i}{j}": v for (i, j), v in outcome.estimate.terms.items()},
            n_per_setting=outcome.estimate.n_per_setting,
            pairs_consumed=source.consumed,
            fidelity_lower=fb.lower,
            fidelity_upper=fb.upper,
        )

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        spec = ExperimentSpec(
            network=_network_config(req.network),
            capacity=req.capacity,
            beta=req.beta,
            alpha=req.alpha,
            delta=req.delta,
            repetitions=req.repetitions,
            seed=req.seed,
            sweep_param=req.param,
            sweep_values=tuple(req.values),
        )
        results = run_sweep(spec, jobs=req.jobs)
        return SweepResponse(
            csv=sweep_csv(req.param, results, req.seed), manifest=spec.manifest()
        )

    @app.post("/figure", response_model=FigureResponse)
    def figure(req: FigureRequest) -> FigureResponse:
        return FigureResponse(
            csv=figure_csv(req.name, seed=req.seed, repetitions=req.repetitions,
                           jobs=req.jobs)
        )

    return app


app = create_app()
