"""Command-line front end. Runs in-process by default; --server points the
same commands at a running HTTP service instead.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import json
import sys

import click
from pydantic import ValidationError

from .fourshot import BlockError
from .scenarios import (BUILTIN_SCENARIOS, Scenario, get_scenario,
                        run_bounds, run_oracle, run_scenario, run_sweep,
                        write_artifacts)

EXIT_NUMERIC = 1
EXIT_CONFIG = 2


def _resolve(name_or_path: str, seed: int | None) -> Scenario:
    try:
        sc = get_scenario(name_or_path)
    except (ValidationError, OSError, ValueError) as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except Exception as exc:   # malformed YAML etc.
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    if seed is not None:
        sc = sc.model_copy(update={"seed": seed})
    return sc


def _execute(fn, *args):
    try:
        return fn(*args)
    except BlockError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)
    except (ValueError, ArithmeticError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)


def _emit(sc: Scenario, result: dict, out: str | None, fmt: str) -> None:
    if out is not None:
        for path in write_artifacts(sc, result, out, fmt):
            click.echo(path)
    else:
        click.echo(json.dumps(result, indent=2))


def _server_post(server: str, endpoint: str, payload: dict) -> dict:
    import httpx

    resp = httpx.post(f"{server.rstrip('/')}{endpoint}", json=payload,
                      timeout=600.0)
    if resp.status_code == 422:
        click.echo(f"configuration error: {resp.text}", err=True)
        sys.exit(EXIT_CONFIG)
    if resp.status_code >= 400:
        click.echo(f"numerical failure: {resp.text}", err=True)
        sys.exit(EXIT_NUMERIC)
    return resp.json()["result"]


_common = [
    click.option("--seed", type=int, default=None,
                 help="Override the scenario RNG seed."),
    click.option("--out", type=click.Path(file_okay=False), default=None,
                 help="Write artifacts into this directory."),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
                 default="json", help="Artifact format."),
    click.option("--server", default=None,
                 help="Base URL of a running fspmag service."),
]


def _with_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
def main() -> None:
    """Pulsed free-spin-precession vector magnetometer simulator."""


@main.command("list-scenarios")
def list_scenarios() -> None:
    """List the built-in named scenarios."""
    for name in sorted(BUILTIN_SCENARIOS):
        click.echo(name)


@main.command()
@click.argument("scenario")
@_with_common
def run(scenario, seed, out, fmt, server) -> None:
    """Run a scenario (built-in name or YAML file) and emit its artifacts."""
    sc = _resolve(scenario, seed)
    if server is not None:
        result = _server_post(server, "/run",
                              {"scenario": sc.model_dump(), "seed": seed})
    else:
        result = _execute(run_scenario, sc)
    _emit(sc, result, out, fmt)


@main.command()
@click.argument("scenario")
@click.option("--param", "parameter", required=True,
              help="Dot path of the scalar config field to sweep.")
@click.option("--values", required=True,
              help="Comma-separated list of values (may be empty).")
@_with_common
def sweep(scenario, parameter, values, seed, out, fmt, server) -> None:
    """Run a scenario once per parameter value; emits a long-format table."""
    sc = _resolve(scenario, seed)
    try:
        vals = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    sweep_sc = sc.model_copy(update={"kind": "sweep"})
    if server is not None:
        result = _server_post(server, "/sweep",
                              {"scenario": sc.model_dump(), "seed": seed,
                               "parameter": parameter, "values": vals})
    else:
        result = _execute(run_sweep, sc, parameter, vals)
    _emit(sweep_sc, result, out, fmt)


@main.command()
@click.argument("scenario")
@_with_common
def oracle(scenario, seed, out, fmt, server) -> None:
    """Analytic systematics budget for a scenario's configuration."""
    sc = _resolve(scenario, seed)
    if server is not None:
        result = _server_post(server, "/oracle",
                              {"scenario": sc.model_dump()})
    else:
        result = _execute(run_oracle, sc)
    _emit(sc, result, out, fmt)


@main.command()
@click.argument("scenario")
@_with_common
def bounds(scenario, seed, out, fmt, server) -> None:
    """Sensitivity bounds report for a scenario's configuration."""
    sc = _resolve(scenario, seed)
    if server is not None:
        result = _server_post(server, "/bounds",
                              {"scenario": sc.model_dump()})
    else:
        result = _execute(run_bounds, sc)
    _emit(sc, result, out, fmt)


if __name__ == "__main__":
    main()
