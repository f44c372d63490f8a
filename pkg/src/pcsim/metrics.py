"""Control-quality metrics and the two-policy comparison runner."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTelemetry
from .harness import run_lockstep
from .scenario import Scenario
from .telemetry import Telemetry


@dataclass
class MetricsReport:
    mean_abs_budget_deviation_w: float
    mean_abs_budget_deviation_pct_tdp: float
    capped_sample_count: int
    max_temp_c: float
    overshoot_above_limit_c: float
    per_core_retired: list[int]

    def to_dict(self) -> dict:
        return {
            "mean_abs_budget_deviation_w": self.mean_abs_budget_deviation_w,
            "mean_abs_budget_deviation_pct_tdp": self.mean_abs_budget_deviation_pct_tdp,
            "capped_sample_count": self.capped_sample_count,
            "max_temp_c": self.max_temp_c,
            "overshoot_above_limit_c": self.overshoot_above_limit_c,
            "per_core_retired": self.per_core_retired,
        }


def compute_metrics(telemetry: Telemetry, scenario: Scenario) -> MetricsReport:
    """Budget deviation is averaged only over samples where capping was
    engaged; retired instructions come from the final record."""
    if len(telemetry) == 0:
        raise EmptyTelemetry("cannot compute metrics without telemetry rows")
    total = telemetry.column("total_power_w")
    budget = telemetry.column("budget_w")
    capped = telemetry.column("capping_active").astype(bool)
    if capped.any():
        deviation_w = float(np.mean(np.abs(total[capped] - budget[capped])))
    else:
        deviation_w = 0.0
    temps = telemetry.per_core("temp_c")
    max_temp = float(temps.max())
    t_limit = getattr(scenario.controller, "t_limit_c", 85.0)
    return MetricsReport(
        mean_abs_budget_deviation_w=deviation_w,
        mean_abs_budget_deviation_pct_tdp=100.0 * deviation_w / scenario.tdp_w,
        capped_sample_count=int(capped.sum()),
        max_temp_c=max_temp,
        overshoot_above_limit_c=max(0.0, max_temp - t_limit),
        per_core_retired=[int(r) for r in telemetry.final_retired()],
    )


def retired_deltas_pct(telemetry_a: Telemetry, telemetry_b: Telemetry) -> np.ndarray:
    """Per-core retired-instruction change of run B relative to run A, percent."""
    a = telemetry_a.final_retired().astype(float)
    b = telemetry_b.final_retired().astype(float)
    if a.shape != b.shape:
        raise ValueError("telemetry sets disagree on core count")
    return 100.0 * (b - a) / a


@dataclass
class ComparisonReport:
    controller_a: str
    controller_b: str
    retired_a: list[int]
    retired_b: list[int]
    delta_b_vs_a_pct: list[float]
    metrics_a: MetricsReport
    metrics_b: MetricsReport

    def to_dict(self) -> dict:
        return {
            "controller_a": self.controller_a,
            "controller_b": self.controller_b,
            "retired_a": self.retired_a,
            "retired_b": self.retired_b,
            "delta_b_vs_a_pct": self.delta_b_vs_a_pct,
            "metrics_a": self.metrics_a.to_dict(),
            "metrics_b": self.metrics_b.to_dict(),
        }

    def to_csv_text(self) -> str:
        lines = ["core,retired_a,retired_b,delta_b_vs_a_pct"]
        for core, (ra, rb, d) in enumerate(
            zip(self.retired_a, self.retired_b, self.delta_b_vs_a_pct)
        ):
            lines.append(f"{core},{ra},{rb},{d!r}")
        return "\n".join(lines) + "\n"


def compare_policies(
    scenario: Scenario, controller_a: str, controller_b: str, seed: int | None = None
) -> ComparisonReport:
    """Run both controllers on the identical scenario (same plant seed, same
    workload map) and report per-core retired-instruction deltas side by side.

    Comparison runs are always lockstep so the two plants see bit-identical
    noise and workload streams.
    """
    spec_a = scenario.resolve_controller(controller_a)
    spec_b = scenario.resolve_controller(controller_b)
    telem_a = run_lockstep(scenario, seed=seed, controller_spec=spec_a)
    telem_b = run_lockstep(scenario, seed=seed, controller_spec=spec_b)
    deltas = retired_deltas_pct(telem_a, telem_b)

    def _metrics(telem, spec):
        patched = scenario.model_copy(update={"controller": spec})
        return compute_metrics(telem, patched)

    return ComparisonReport(
        controller_a=controller_a,
        controller_b=controller_b,
        retired_a=[int(r) for r in telem_a.final_retired()],
        retired_b=[int(r) for r in telem_b.final_retired()],
        delta_b_vs_a_pct=[float(d) for d in deltas],
        metrics_a=_metrics(telem_a, spec_a),
        metrics_b=_metrics(telem_b, spec_b),
    )
