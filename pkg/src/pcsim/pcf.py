"""Two-layer reactive power control firmware.

The frequency control task (PFCT, 2 kHz) runs the control phases in order:
dispatch the frequencies computed one step earlier (P1), read sensors (P2),
take in commands (P3), estimate per-core power (P4), cap the total against the
budget with the proportional-above-floor alpha rule (P5), trim hot cores with
per-core PIDs (P6), and invert the power model into next step's
frequency/voltage pair (P7). The voltage control task (PVCT, 8 kHz) monitors
the rails, takes budget directives, and dispatches the voltages computed by the
most recent P7; it has priority over the PFCT at coincident ticks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .control import Actuation, ControlTask, estimate_core_powers_w, route_command
from .opp import OperatingPointTable
from .plant import SensorSnapshot
from .power import PowerParams, kappa
from .scmi import ScmiCommand

log = logging.getLogger(__name__)


@dataclass
class PcfConfig:
    table: OperatingPointTable
    pfct_period_s: float = 500e-6
    pvct_period_s: float = 125e-6
    t_limit_c: float = 85.0
    t_margin_c: float = 80.0  # stabilization threshold the PIDs regulate to
    kp_w_per_c: float = 0.8
    ki_w_per_cs: float = 30.0
    kd_ws_per_c: float = 0.0
    p_min_w: float = 1.0  # per-core floor the capping never goes below
    initial_budget_w: float = 1e9
    # thermally limited cores ask the capper for less, so their headroom is
    # redistributed instead of discarded; the limit releases at this rate
    thermal_release_w_per_step: float = 0.5

    def __post_init__(self):
        ratio = self.pfct_period_s / self.pvct_period_s
        if abs(ratio - round(ratio)) > 1e-9 or ratio < 1:
            raise ValueError("pfct_period must be an integer multiple of pvct_period")
        if not self.t_margin_c < self.t_limit_c:
            raise ValueError("t_margin must sit below t_limit")
        if min(self.kp_w_per_c, self.ki_w_per_cs, self.kd_ws_per_c) < 0:
            raise ValueError("PID gains must be >= 0")
        if self.initial_budget_w <= 0:
            raise ValueError("budget must be > 0")


def p5_alpha_power_cap(
    targets_w: np.ndarray, p_min_w: np.ndarray, budget_w: float
) -> tuple[np.ndarray, bool]:
    """Scale the above-floor share of every core by a common alpha so the total
    meets the budget; returns (caps, capping_engaged)."""
    total = float(targets_w.sum())
    floor = float(p_min_w.sum())
    if total <= budget_w:
        return targets_w.copy(), False
    if budget_w <= floor:
        log.warning(
            "infeasible budget %.2f W below the %.2f W floor; pinning all cores", budget_w, floor
        )
        return p_min_w.copy(), True
    alpha = (budget_w - floor) / (total - floor)
    alpha = min(max(alpha, 0.0), 1.0)
    return p_min_w + alpha * (targets_w - p_min_w), True


class ThermalPidBank:
    """One discrete PID per core converting over-margin temperature into a
    power reduction, with the integrator clamped so the result stays inside
    [p_min, cap_in] (anti-windup)."""

    def __init__(self, n: int, kp: float, ki: float, kd: float, dt_s: float, t_margin_c: float):
        self.kp, self.ki, self.kd = kp, ki, kd
        self.dt_s = dt_s
        self.t_margin_c = t_margin_c
        self.integ = np.zeros(n)
        self.prev_err = np.zeros(n)

    def step(self, temps_c: np.ndarray, caps_in_w: np.ndarray, p_min_w: np.ndarray) -> np.ndarray:
        err = temps_c - self.t_margin_c
        self.integ = self.integ + err * self.dt_s
        headroom = np.maximum(caps_in_w - p_min_w, 0.0)
        if self.ki > 0:
            self.integ = np.clip(self.integ, 0.0, headroom / self.ki)
        else:
            self.integ[:] = 0.0
        reduction = self.kp * err + self.ki * self.integ
        if self.kd > 0:
            reduction = reduction + self.kd * (err - self.prev_err) / self.dt_s
        self.prev_err = err
        reduction = np.clip(reduction, 0.0, headroom)
        return caps_in_w - reduction


def p7_compute_fv(
    caps_w: np.ndarray,
    snapshot: SensorSnapshot,
    os_targets_hz: np.ndarray,
    table: OperatingPointTable,
    params: PowerParams,
    volt_now_v: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Invert the power model at the current domain voltage into the largest
    table frequency not exceeding the cap or the OS target, then pick per
    domain the minimum voltage supporting its fastest core."""
    k = kappa(params, snapshot.temp_c)
    ceff = params.ceff_base_f * snapshot.ceff_mult
    f_raw = (caps_w / k - params.icc_a * volt_now_v) / (ceff * volt_now_v**2)
    freqs = table.floor_to_level_hz(np.minimum(f_raw, os_targets_hz))
    volts = np.empty_like(freqs)
    for domain in table.domains:
        idx = np.asarray(domain)
        volts[idx] = table.volt_for_freq_v(float(freqs[idx].max()))
    return freqs, volts


@dataclass
class ControllerState:
    os_targets_hz: np.ndarray
    budget_w: float
    pending_freq_hz: np.ndarray  # computed at step n-1, dispatched at P1 of step n
    pending_volt_v: np.ndarray  # computed at step n, dispatched by the PVCT
    volt_dispatched: bool = False
    est_power_w: np.ndarray | None = None
    rail_power_w: np.ndarray | None = None


class PcfController:
    def __init__(self, config: PcfConfig, params: PowerParams, core_count: int):
        self.config = config
        self.params = params  # nominal coefficients; the firmware knows no variability
        n = core_count
        table = config.table
        os_targets = np.full(n, table.f_max_hz)
        init_freq = table.floor_to_level_hz(os_targets)
        init_volt = np.empty(n)
        for domain in table.domains:
            idx = np.asarray(domain)
            init_volt[idx] = table.volt_for_freq_v(float(init_freq[idx].max()))
        self.state = ControllerState(
            os_targets_hz=os_targets,
            budget_w=config.initial_budget_w,
            pending_freq_hz=init_freq,
            pending_volt_v=init_volt,
        )
        self.pids = ThermalPidBank(
            n,
            config.kp_w_per_c,
            config.ki_w_per_cs,
            config.kd_ws_per_c,
            config.pfct_period_s,
            config.t_margin_c,
        )
        self.p_min_w = np.full(n, config.p_min_w)
        self.freq_now_hz = init_freq.copy()
        self.volt_now_v = init_volt.copy()
        self.thermal_limit_w = np.full(n, np.inf)
        self.capping_active = False
        self.pfct_steps = 0
        self.pvct_steps = 0

    def set_os_targets(self, os_targets_hz: np.ndarray):
        """Seed the OS frequency targets (later updated via mailbox commands)."""
        table = self.config.table
        self.state.os_targets_hz = np.asarray(os_targets_hz, dtype=float).copy()
        self.state.pending_freq_hz = table.floor_to_level_hz(self.state.os_targets_hz)
        for domain in table.domains:
            idx = np.asarray(domain)
            self.state.pending_volt_v[idx] = table.volt_for_freq_v(
                float(self.state.pending_freq_hz[idx].max())
            )
        self.freq_now_hz = self.state.pending_freq_hz.copy()
        self.volt_now_v = self.state.pending_volt_v.copy()

    def tasks(self) -> list[ControlTask]:
        return [
            ControlTask("pvct", self.config.pvct_period_s, priority=0),
            ControlTask("pfct", self.config.pfct_period_s, priority=1),
        ]

    def on_task(
        self, name: str, snapshot: SensorSnapshot, inbox: list[ScmiCommand]
    ) -> Actuation | None:
        if name == "pvct":
            return self.pvct_step(snapshot, inbox)
        return self.pfct_step(snapshot, inbox)

    @property
    def budget_w(self) -> float:
        return self.state.budget_w

    def _intake(self, inbox: list[ScmiCommand], who: str):
        for cmd in inbox:
            new_budget = route_command(cmd, self.state.os_targets_hz, self.config.table, who)
            if new_budget is not None:
                self.state.budget_w = new_budget

    def pvct_step(self, snapshot: SensorSnapshot, inbox: list[ScmiCommand]) -> Actuation | None:
        """Rail monitoring, budget intake, and dispatch of the voltages from the
        most recent P7 (initial table voltages before any P7 ran)."""
        self.pvct_steps += 1
        self.state.rail_power_w = snapshot.rail_power_w
        self._intake(inbox, "pvct")
        if not self.state.volt_dispatched:
            self.state.volt_dispatched = True
            self.volt_now_v = self.state.pending_volt_v.copy()
            return Actuation(volt_v=self.volt_now_v.copy())
        return None

    def pfct_step(self, snapshot: SensorSnapshot, inbox: list[ScmiCommand]) -> Actuation:
        cfg = self.config
        st = self.state
        # P1: allocate the frequencies computed at step n-1
        dispatch = st.pending_freq_hz.copy()
        self.freq_now_hz = dispatch
        # P2 is the snapshot itself; P3: commands and constraints
        self._intake(inbox, "pfct")
        # P4: estimated per-core power and system total at the running setpoints
        st.est_power_w = estimate_core_powers_w(self.params, snapshot, dispatch, self.volt_now_v)
        # power the cores ask for at their OS targets, bounded by the thermal
        # limit learned from P6 so hot cores' headroom goes to the others
        demand = estimate_core_powers_w(
            self.params, snapshot, st.os_targets_hz, self.volt_now_v
        )
        demand = np.minimum(demand, self.thermal_limit_w)
        demand = np.maximum(demand, self.p_min_w)
        # P5: alpha power capping against the budget
        caps, self.capping_active = p5_alpha_power_cap(demand, self.p_min_w, st.budget_w)
        # P6: per-core thermal PIDs may only reduce further
        caps_after_pid = self.pids.step(snapshot.temp_c, caps, self.p_min_w)
        reduction = caps - caps_after_pid
        self.thermal_limit_w = np.where(
            reduction > 1e-12,
            caps_after_pid + cfg.thermal_release_w_per_step,
            np.minimum(self.thermal_limit_w + cfg.thermal_release_w_per_step, np.inf),
        )
        caps = caps_after_pid
        # P7: frequency/voltage for step n+1
        freqs, volts = p7_compute_fv(
            caps, snapshot, st.os_targets_hz, cfg.table, self.params, self.volt_now_v
        )
        st.pending_freq_hz = freqs
        st.pending_volt_v = volts
        st.volt_dispatched = False
        self.pfct_steps += 1
        return Actuation(freq_hz=dispatch)
