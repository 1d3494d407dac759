"""HTTP service wrapping the scenario runners.

Endpoints:
  GET  /scenarios        list built-in scenario names
  POST /run              run a scenario (built-in name or inline config)
  POST /sweep            parameter sweep over a scenario
  POST /oracle           systematics budget for a scenario
  POST /bounds           sensitivity bounds report for a scenario
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ValidationError

from .fourshot import BlockError
from .scenarios import (BUILTIN_SCENARIOS, Scenario, run_bounds, run_oracle,
                        run_scenario, run_sweep)

app = FastAPI(title="fspmag", version="1.0.0")


class RunRequest(BaseModel):
    scenario: str | dict
    seed: int | None = None


class SweepRequest(RunRequest):
    parameter: str | None = None
    values: list[float] | None = None


def _resolve(req: RunRequest) -> Scenario:
    try:
        if isinstance(req.scenario, str):
            if req.scenario not in BUILTIN_SCENARIOS:
                raise HTTPException(404,
                                    f"unknown scenario {req.scenario!r}")
            sc = BUILTIN_SCENARIOS[req.scenario]
        else:
            sc = Scenario.model_validate(req.scenario)
    except ValidationError as exc:
        raise HTTPException(422, str(exc)) from exc
    if req.seed is not None:
        sc = sc.model_copy(update={"seed": req.seed})
    return sc


def _run(fn, *args) -> dict:
    try:
        return fn(*args)
    except BlockError as exc:
        raise HTTPException(500, f"numerical failure: {exc}") from exc
    except ValueError as exc:
        raise HTTPException(400, str(exc)) from exc


@app.get("/scenarios")
def list_scenarios() -> dict:
    return {"scenarios": sorted(BUILTIN_SCENARIOS)}


@app.post("/run")
def run(req: RunRequest) -> dict:
    sc = _resolve(req)
    return {"scenario": sc.name, "config_hash": sc.config_hash(),
            "result": _run(run_scenario, sc)}


@app.post("/sweep")
def sweep(req: SweepRequest) -> dict:
    sc = _resolve(req)
    return {"scenario": sc.name,
            "result": _run(run_sweep, sc, req.parameter, req.values)}


@app.post("/oracle")
def oracle(req: RunRequest) -> dict:
    sc = _resolve(req)
    return {"scenario": sc.name, "result": _run(run_oracle, sc)}


@app.post("/bounds")
def bounds(req: RunRequest) -> dict:
    sc = _resolve(req)
    return {"scenario": sc.name, "result": _run(run_bounds, sc)}
