"""Scenario schema: a single JSON document drives a whole closed-loop run.

Field names carry explicit units (e.g. pfct_period_us, budget_w) since unit
bugs are the dominant failure mode in control configs. The same pydantic
models validate scenario files on disk and request bodies at the service
boundary.
"""

from __future__ import annotations

import json
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ScenarioInvalid


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FloorplanSpec(_Model):
    rows: int = 3
    cols: int = 3
    core_pitch_m: float = 0.004


class ThermalSpec(_Model):
    r_lateral_c_per_w: float = 2.0
    r_vertical_c_per_w: float = 0.8
    c_thermal_j_per_c: float = 0.005
    t_ambient_c: float = 45.0


class PowerSpec(_Model):
    icc_a: float = 1.6
    ceff_base_f: float = 1.2e-8
    kappa_slope_per_c: float = 0.01
    kappa_ref_c: float = 25.0
    noise_sigma_w: float = 0.05
    variability_sigma: float = 0.03


class SensorSpec(_Model):
    temp_quant_c: float = 0.1
    power_quant_w: float = 0.01


class ActuatorSpec(_Model):
    pll_delay_us: float = 5.0
    vrm_delay_us: float = 10.0


class TraceSegmentSpec(_Model):
    duration_s: float
    mix: dict[str, float]


class TraceSpec(_Model):
    looping: bool = True
    segments: list[TraceSegmentSpec]


class WorkloadSpec(_Model):
    kind: Literal["max", "idle", "mix", "fast"] | None = None
    seed: int = 0
    trace: TraceSpec | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.kind is None) == (self.trace is None):
            raise ValueError("workload needs exactly one of kind or trace")
        return self


class OperatingPointSpec(_Model):
    f_min_ghz: float = 0.4
    f_max_ghz: float = 2.0
    step_ghz: float = 0.1
    fixed_voltage_v: float | None = None
    domains: list[list[int]] | None = None  # default: two contiguous halves


class PcfSpec(_Model):
    type: Literal["pcf"] = "pcf"
    pfct_period_us: float = 500.0
    pvct_period_us: float = 125.0
    t_limit_c: float = 85.0
    t_margin_c: float = 80.0
    kp_w_per_c: float = 0.8
    ki_w_per_cs: float = 30.0
    kd_ws_per_c: float = 0.0
    p_min_w: float = 1.0
    initial_budget_w: float = 1e9


class VotingBoxSpec(_Model):
    type: Literal["voting_hottest", "voting_percore"]
    period_us: float = 250.0
    kp_hz_per_c: float = 0.1e9
    ki_hz_per_cs: float = 1.5e9
    t_limit_c: float = 85.0
    power_gain: float = 1.0
    release_step_mhz: float | None = 100.0
    initial_budget_w: float = 1e9


ControllerSpec = Union[PcfSpec, VotingBoxSpec]

CONTROLLER_NAMES = ("pcf", "voting_hottest", "voting_percore")


class BudgetEntry(_Model):
    t_s: float
    budget_w: float


class GovernorEntry(_Model):
    t_s: float
    cmd: Literal["perf_level_set", "power_cap_set", "base_version"]
    core: int | None = None
    freq_ghz: float | None = None
    budget_w: float | None = None
    agent_id: int = 1

    @model_validator(mode="after")
    def _fields_for_cmd(self):
        if self.cmd == "perf_level_set" and (self.core is None or self.freq_ghz is None):
            raise ValueError("perf_level_set needs core and freq_ghz")
        if self.cmd == "power_cap_set" and self.budget_w is None:
            raise ValueError("power_cap_set needs budget_w")
        return self


class AsyncSpec(_Model):
    plant_rate_sim_per_wall: float = 0.05
    controller_slowdown: float = 1.0


class Scenario(_Model):
    name: str = "scenario"
    duration_s: float
    dt_us: float = 1.0
    seed: int = 0
    tdp_w: float = 120.0
    execution_mode: Literal["lockstep", "async"] = "lockstep"
    floorplan: FloorplanSpec = Field(default_factory=FloorplanSpec)
    thermal: ThermalSpec = Field(default_factory=ThermalSpec)
    power: PowerSpec = Field(default_factory=PowerSpec)
    sensors: SensorSpec = Field(default_factory=SensorSpec)
    actuators: ActuatorSpec = Field(default_factory=ActuatorSpec)
    operating_points: OperatingPointSpec = Field(default_factory=OperatingPointSpec)
    workloads: dict[int, WorkloadSpec] = Field(default_factory=dict)
    os_targets_ghz: dict[int, float] = Field(default_factory=dict)
    controller: ControllerSpec = Field(default_factory=PcfSpec, discriminator="type")
    controllers: dict[str, ControllerSpec] = Field(default_factory=dict)
    budget_schedule: list[BudgetEntry] = Field(default_factory=list)
    governor_schedule: list[GovernorEntry] = Field(default_factory=list)
    telemetry_decimation_us: float = 50.0
    async_options: AsyncSpec = Field(default_factory=AsyncSpec)

    @property
    def core_count(self) -> int:
        return self.floorplan.rows * self.floorplan.cols

    @property
    def dt_s(self) -> float:
        return self.dt_us * 1e-6

    def validate_runnable(self):
        """Pre-flight checks beyond the schema; raises ScenarioInvalid."""
        errors = []
        n = self.core_count
        if self.duration_s <= 0:
            errors.append("duration_s must be > 0")
        if self.dt_us <= 0:
            errors.append("dt_us must be > 0")

        def on_grid(t_s, what):
            ticks = t_s / self.dt_s
            if abs(ticks - round(ticks)) > 1e-6:
                errors.append(f"{what} = {t_s}s is not a multiple of dt")

        for core in list(self.workloads) + list(self.os_targets_ghz):
            if not 0 <= core < n:
                errors.append(f"core {core} does not exist on the {n}-core floorplan")
        for sched, key in ((self.budget_schedule, "budget"), (self.governor_schedule, "governor")):
            times = [e.t_s for e in sched]
            if any(t < 0 or t > self.duration_s for t in times):
                errors.append(f"{key} schedule entries must lie within [0, duration]")
            if times != sorted(times):
                errors.append(f"{key} schedule must be time-sorted")
        for entry in self.governor_schedule:
            if entry.cmd == "perf_level_set" and not 0 <= (entry.core or 0) < n:
                errors.append(f"governor perf_level_set for unknown core {entry.core}")
        if isinstance(self.controller, PcfSpec):
            on_grid(self.controller.pvct_period_us * 1e-6, "pvct_period")
            on_grid(self.controller.pfct_period_us * 1e-6, "pfct_period")
        else:
            on_grid(self.controller.period_us * 1e-6, "controller period")
        on_grid(self.telemetry_decimation_us * 1e-6, "telemetry decimation")
        on_grid(self.actuators.pll_delay_us * 1e-6, "pll delay")
        on_grid(self.actuators.vrm_delay_us * 1e-6, "vrm delay")
        if self.operating_points.domains is not None:
            cores = sorted(c for d in self.operating_points.domains for c in d)
            if cores != list(range(n)):
                errors.append("voltage domains must partition the floorplan cores")
        if errors:
            raise ScenarioInvalid("; ".join(errors))

    def resolve_controller(self, name: str) -> ControllerSpec:
        """Pick a controller config by name: the catalog first, then the
        scenario's own controller, then library defaults."""
        if name not in CONTROLLER_NAMES:
            raise ScenarioInvalid(f"unknown controller {name!r}; expected one of {CONTROLLER_NAMES}")
        if name in self.controllers:
            spec = self.controllers[name]
            if _controller_name(spec) != name:
                raise ScenarioInvalid(f"catalog entry {name!r} has type {_controller_name(spec)!r}")
            return spec
        if _controller_name(self.controller) == name:
            return self.controller
        if name == "pcf":
            return PcfSpec()
        return VotingBoxSpec(type=name)


def _controller_name(spec: ControllerSpec) -> str:
    return spec.type


def load_scenario(text_or_dict) -> Scenario:
    """Parse and pre-flight a scenario document; raises ScenarioInvalid."""
    try:
        if isinstance(text_or_dict, (str, bytes)):
            scenario = Scenario.model_validate(json.loads(text_or_dict))
        else:
            scenario = Scenario.model_validate(text_or_dict)
    except (json.JSONDecodeError, ValidationError) as exc:
        raise ScenarioInvalid(str(exc)) from exc
    scenario.validate_runnable()
    return scenario


def load_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())
