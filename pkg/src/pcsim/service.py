"""HTTP service wrapping the simulator: scenario validation, closed-loop runs,
metrics, and policy comparisons.

Runs execute synchronously in the request; a 2 s reference scenario takes a
few seconds of wall time. Telemetry returns as text/csv, everything else as
JSON. The CLI drives these endpoints either over the network or through an
in-process ASGI transport.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, ConfigDict

from . import __version__
from .errors import EmptyTelemetry, ScenarioInvalid
from .harness import run
from .metrics import compare_policies, compute_metrics
from .scenario import Scenario
from .telemetry import Telemetry

app = FastAPI(title="pcsim", version=__version__)


class HealthResponse(BaseModel):
    status: str
    version: str


class ValidateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario: Scenario


class ValidateResponse(BaseModel):
    valid: bool
    errors: list[str]


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario: Scenario
    mode: Literal["lockstep", "async"] | None = None
    seed: int | None = None
    controller: str | None = None


class MetricsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario: Scenario
    telemetry_csv: str


class MetricsResponse(BaseModel):
    mean_abs_budget_deviation_w: float
    mean_abs_budget_deviation_pct_tdp: float
    capped_sample_count: int
    max_temp_c: float
    overshoot_above_limit_c: float
    per_core_retired: list[int]


class CompareRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario: Scenario
    controller_a: str
    controller_b: str
    seed: int | None = None


class CompareResponse(BaseModel):
    controller_a: str
    controller_b: str
    retired_a: list[int]
    retired_b: list[int]
    delta_b_vs_a_pct: list[float]
    metrics_a: MetricsResponse
    metrics_b: MetricsResponse


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    try:
        req.scenario.validate_runnable()
    except ScenarioInvalid as exc:
        return ValidateResponse(valid=False, errors=str(exc).split("; "))
    return ValidateResponse(valid=True, errors=[])


@app.post("/run")
def run_scenario(req: RunRequest) -> Response:
    try:
        spec = req.scenario.resolve_controller(req.controller) if req.controller else None
        telem = run(req.scenario, mode=req.mode, seed=req.seed, controller_spec=spec)
    except ScenarioInvalid as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return Response(content=telem.to_csv_text(), media_type="text/csv")


@app.post("/metrics", response_model=MetricsResponse)
def metrics(req: MetricsRequest) -> MetricsResponse:
    try:
        telem = Telemetry.from_csv_text(req.telemetry_csv)
        report = compute_metrics(telem, req.scenario)
    except (EmptyTelemetry, ValueError) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return MetricsResponse(**report.to_dict())


@app.post("/compare", response_model=CompareResponse)
def compare(req: CompareRequest) -> CompareResponse:
    try:
        report = compare_policies(req.scenario, req.controller_a, req.controller_b, seed=req.seed)
    except ScenarioInvalid as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    doc = report.to_dict()
    doc["metrics_a"] = MetricsResponse(**doc["metrics_a"])
    doc["metrics_b"] = MetricsResponse(**doc["metrics_b"])
    return CompareResponse(**doc)
