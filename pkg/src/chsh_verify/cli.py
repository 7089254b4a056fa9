"""Command-line surface. Each subcommand is a thin client of the service
endpoints: with ``--server`` it talks to a remote instance over HTTP, otherwise
it drives the app in-process through the same request/response path.

Exit codes: 0 success, 1 verification rejected, 2 usage or parameter error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path
from typing import Optional

import click
import httpx

SEED_ENV_VAR = "CHSH_VERIFY_SEED"

# Config-file keys and CLI flag names are identical strings (dashed).
_SPEC_KEYS = {
    "epsilon": float,
    "delta": float,
    "alpha": float,
    "beta": float,
    "capacity": int,
    "n": int,
    "seed": int,
    "repetitions": int,
    "jobs": int,
}
_NETWORK_KEYS = {
    "distance-km": ("distance_km", float),
    "depolar-rate-hz": ("channel_depolar_rate_hz", float),
    "fiber-speed-km-per-s": ("fiber_speed_km_per_s", float),
    "attenuation-length-km": ("attenuation_length_km", float),
    "memory-depolar-rate-hz": ("memory_depolar_rate_hz", float),
    "attempt-rate-hz": ("attempt_rate_hz", float),
    "classical-speed-km-per-s": ("classical_speed_km_per_s", float),
}


def _parse_config(path: str) -> dict[str, str]:
    """Flat key/value config: one ``key = value`` (or ``key: value``) per line,
    '#' comments allowed."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":", None):
            if sep is None:
                parts = line.split(None, 1)
            elif sep in line:
                parts = line.split(sep, 1)
            else:
                continue
            break
        if len(parts) != 2:
            raise click.UsageError(f"{path}:{lineno}: cannot parse {raw!r}")
        values[parts[0].strip()] = parts[1].strip()
    return values


def _client(server: Optional[str]):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # In-process client: same request path as a remote server, no socket.
    from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app())


def _post(server: Optional[str], endpoint: str, payload: dict) -> dict:
    with _client(server) as client:
        resp = client.post(endpoint, json=payload)
    if resp.status_code in (400, 422):
        detail = resp.json().get("detail")
        raise click.UsageError(f"{endpoint}: {detail}")
    resp.raise_for_status()
    return resp.json()


def _default_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    return int(os.environ.get(SEED_ENV_VAR, "0"))


def _network_payload(config_values: dict[str, str], **overrides: Optional[float]) -> dict:
    network: dict[str, float] = {}
    for key, (field, cast) in _NETWORK_KEYS.items():
        if key in config_values:
            network[field] = cast(config_values[key])
    for field, value in overrides.items():
        if value is not None:
            network[field] = value
    return network


def _merged(config_values: dict[str, str], key: str, flag_value, default=None):
    """CLI flag wins over config file, config file over default."""
    if flag_value is not None:
        return flag_value
    if key in config_values:
        return _SPEC_KEYS[key](config_values[key])
    return default


def _write_or_print(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Base URL of a running service; default runs in-process.")
@click.pass_context
def main(ctx: click.Context, server: Optional[str]) -> None:
    """Entanglement certification via CHSH-inequality violation."""
    ctx.obj = {"server": server}


@main.command()
@click.option("--epsilon", type=float, required=True, help="Target estimate precision.")
@click.option("--delta", type=float, required=True, help="Failure probability budget.")
@click.option("--method", type=click.Choice(["chebyshev", "hoeffding"]), default=None,
              help="Force one bound instead of taking the smaller count.")
@click.pass_context
def plan(ctx: click.Context, epsilon: float, delta: float, method: Optional[str]) -> None:
    """Sample-size plan for estimating the CHSH value to +/-epsilon."""
    payload = {"epsilon": epsilon, "delta": delta, "method": method}
    result = _post(ctx.obj["server"], "/plan", payload)
    click.echo(json.dumps(result))


@main.command()
@click.option("--s-bar", type=float, required=True, help="Estimated CHSH value.")
@click.option("--epsilon", type=float, required=True)
@click.option("--delta", type=float, required=True)
@click.pass_context
def bounds(ctx: click.Context, s_bar: float, epsilon: float, delta: float) -> None:
    """Confidence interval for the entanglement fidelity from an estimate."""
    payload = {"s_bar": s_bar, "epsilon": epsilon, "delta": delta}
    result = _post(ctx.obj["server"], "/bounds", payload)
    click.echo(json.dumps(result))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Flat key/value config file; flags override it.")
@click.option("--protocol", type=click.Choice(["ev", "pev"]), default="pev")
@click.option("--alpha", type=float, default=None)
@click.option("--delta", type=float, default=None, help="Error budget (ev only).")
@click.option("--n", type=int, default=None, help="Pairs per setting (pev only).")
@click.option("--seed", type=int, default=None)
@click.option("--distance-km", type=float, default=None)
@click.option("--depolar-rate-hz", type=float, default=None)
@click.option("--fiber-speed-km-per-s", type=float, default=None)
@click.option("--attenuation-length-km", type=float, default=None)
@click.option("--memory-depolar-rate-hz", type=float, default=None)
@click.option("--attempt-rate-hz", type=float, default=None)
@click.option("--classical-speed-km-per-s", type=float, default=None)
@click.option("--out", type=click.Path(), default=None, help="Write JSON result here.")
@click.pass_context
def verify(ctx: click.Context, config_path, protocol, alpha, delta, n, seed,
           distance_km, depolar_rate_hz, fiber_speed_km_per_s,
           attenuation_length_km, memory_depolar_rate_hz, attempt_rate_hz,
           classical_speed_km_per_s, out) -> None:
    """Run a verification protocol over the simulated link; exits 1 on reject."""
    cfg = _parse_config(config_path) if config_path else {}
    payload = {
        "protocol": protocol,
        "alpha": _merged(cfg, "alpha", alpha, 0.1),
        "delta": _merged(cfg, "delta", delta),
        "n": _merged(cfg, "n", n),
        "seed": _default_seed(_merged(cfg, "seed", seed)),
        "network": _network_payload(
            cfg,
            distance_km=distance_km,
            channel_depolar_rate_hz=depolar_rate_hz,
            fiber_speed_km_per_s=fiber_speed_km_per_s,
            attenuation_length_km=attenuation_length_km,
            memory_depolar_rate_hz=memory_depolar_rate_hz,
            attempt_rate_hz=attempt_rate_hz,
            classical_speed_km_per_s=classical_speed_km_per_s,
        ),
    }
    result = _post(ctx.obj["server"], "/verify", payload)
    text = json.dumps(result, indent=2) + "\n"
    _write_or_print(text, out)
    if out:
        click.echo(f"decision: {result['decision']}")
    if not result["accepted"]:
        sys.exit(1)


@main.command()
@click.option("--param", type=click.Choice(["beta", "distance", "depolar_rate", "alpha"]),
              required=True, help="Parameter to sweep; others stay at baseline.")
@click.option("--values", required=True,
              help="Comma-separated grid values, e.g. '0.1,0.2,0.3'.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--capacity", type=int, default=None)
@click.option("--repetitions", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--jobs", type=int, default=None, help="Worker processes (default: all cores).")
@click.option("--distance-km", type=float, default=None)
@click.option("--depolar-rate-hz", type=float, default=None)
@click.option("--out", type=click.Path(), default=None,
              help="CSV output path; a .manifest.json is written alongside.")
@click.pass_context
def sweep(ctx: click.Context, param, values, config_path, alpha, beta, delta,
          capacity, repetitions, seed, jobs, distance_km, depolar_rate_hz, out) -> None:
    """Monte-Carlo parameter sweep; emits one CSV row per grid value."""
    cfg = _parse_config(config_path) if config_path else {}
    try:
        grid = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise click.UsageError(f"bad --values: {exc}")
    if not grid:
        raise click.UsageError("--values is empty")
    payload = {
        "param": param,
        "values": grid,
        "capacity": _merged(cfg, "capacity", capacity, 10_000),
        "beta": _merged(cfg, "beta", beta, 0.3),
        "alpha": _merged(cfg, "alpha", alpha, 0.1),
        "delta": _merged(cfg, "delta", delta, 0.1),
        "repetitions": _merged(cfg, "repetitions", repetitions, 200),
        "seed": _default_seed(_merged(cfg, "seed", seed)),
        "jobs": _merged(cfg, "jobs", jobs, os.cpu_count() or 1),
        "network": _network_payload(cfg, distance_km=distance_km,
                                    channel_depolar_rate_hz=depolar_rate_hz),
    }
    result = _post(ctx.obj["server"], "/sweep", payload)
    _write_or_print(result["csv"], out)
    if out:
        manifest_path = Path(out).with_suffix(Path(out).suffix + ".manifest.json")
        manifest_path.write_text(json.dumps(result["manifest"], indent=2, sort_keys=True) + "\n")


@main.command()
@click.argument("name", type=click.Choice(["fig2", "fig4", "fig5", "fig6", "fig7", "fig8"]))
@click.option("--seed", type=int, default=None)
@click.option("--repetitions", type=int, default=200,
              help="Repetitions per sweep point (sweep presets only).")
@click.option("--jobs", type=int, default=None)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def figure(ctx: click.Context, name, seed, repetitions, jobs, out) -> None:
    """Emit the plot-data series for a named preset as CSV."""
    payload = {
        "name": name,
        "seed": _default_seed(seed),
        "repetitions": repetitions,
        "jobs": jobs if jobs is not None else (os.cpu_count() or 1),
    }
    result = _post(ctx.obj["server"], "/figure", payload)
    _write_or_print(result["csv"], out)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("chsh_verify.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
