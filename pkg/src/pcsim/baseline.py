"""Voting-box baseline controller in the style of industrial on-chip power
firmware: independent thermal and power votes per core, resolved by a
minimum-frequency selection against the OS target, on a 250 us period.

The thermal vote is a PID in frequency units driven either by the hottest
core's temperature (shared penalty for the whole tile) or by each core's own
temperature (the per-core variant). The power vote reduces a shared frequency
ceiling proportionally to the budget overshoot and releases it back toward
f_max with a bounded slew when consumption drops below budget.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .control import Actuation, ControlTask, estimate_core_powers_w, route_command
from .opp import OperatingPointTable
from .plant import SensorSnapshot
from .power import PowerParams
from .scmi import ScmiCommand

log = logging.getLogger(__name__)

VARIANTS = ("hottest", "percore")


@dataclass
class VotingBoxConfig:
    table: OperatingPointTable
    variant: str = "hottest"
    period_s: float = 250e-6
    kp_hz_per_c: float = 0.1e9
    ki_hz_per_cs: float = 1.5e9
    t_limit_c: float = 85.0
    power_gain: float = 1.0
    release_step_hz: float | None = 0.1e9  # None: release straight to f_max
    initial_budget_w: float = 1e9

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.period_s <= 0:
            raise ValueError("period must be > 0")
        if min(self.kp_hz_per_c, self.ki_hz_per_cs, self.power_gain) < 0:
            raise ValueError("gains must be >= 0")


class _FreqPid:
    """PI controller emitting a frequency reduction, clamped to the table span."""

    def __init__(self, kp: float, ki: float, dt_s: float, span_hz: float):
        self.kp, self.ki, self.dt_s, self.span_hz = kp, ki, dt_s, span_hz
        self.integ = 0.0

    def step(self, err_c: float) -> float:
        self.integ += err_c * self.dt_s
        if self.ki > 0:
            self.integ = min(max(self.integ, 0.0), self.span_hz / self.ki)
        else:
            self.integ = 0.0
        return min(max(self.kp * err_c + self.ki * self.integ, 0.0), self.span_hz)


def thermal_vote(
    temps_c: np.ndarray, cfg: VotingBoxConfig, pids: list[_FreqPid]
) -> np.ndarray:
    """Per-core frequency votes from the thermal PIDs.

    hottest: a single PID on max(temps) penalizes every core identically.
    percore: each core is reduced by its own PID only.
    """
    f_max = cfg.table.f_max_hz
    n = len(temps_c)
    if cfg.variant == "hottest":
        reduction = pids[0].step(float(temps_c.max()) - cfg.t_limit_c)
        return np.full(n, f_max - reduction)
    return np.array(
        [f_max - pids[i].step(float(temps_c[i]) - cfg.t_limit_c) for i in range(n)]
    )


def power_vote(
    est_powers_w: np.ndarray, budget_w: float, cfg: VotingBoxConfig, state: dict
) -> np.ndarray:
    """Shared frequency ceiling scaled down with the relative budget overshoot;
    slew-limited release once consumption is back under budget."""
    f_max, f_min = cfg.table.f_max_hz, cfg.table.f_min_hz
    ceiling = state.get("power_ceiling_hz", f_max)
    total = float(np.sum(est_powers_w))
    if total > budget_w:
        overshoot = (total - budget_w) / budget_w
        ceiling = max(f_min, ceiling - cfg.power_gain * overshoot * f_max)
    elif cfg.release_step_hz is None:
        ceiling = f_max
    else:
        ceiling = min(f_max, ceiling + cfg.release_step_hz)
    state["power_ceiling_hz"] = ceiling
    return np.full(len(est_powers_w), ceiling)


def voting_box_select(
    votes: list[np.ndarray], os_targets_hz: np.ndarray, table: OperatingPointTable
) -> np.ndarray:
    """Per core, the table floor of the minimum across all votes and the OS
    target (minimum frequency, i.e. the most conservative P-state)."""
    stacked = np.vstack(votes + [os_targets_hz])
    return table.floor_to_level_hz(stacked.min(axis=0))


class VotingBoxController:
    def __init__(self, config: VotingBoxConfig, params: PowerParams, core_count: int):
        self.config = config
        self.params = params
        n = core_count
        table = config.table
        span = table.f_max_hz - table.f_min_hz
        n_pids = 1 if config.variant == "hottest" else n
        self.pids = [
            _FreqPid(config.kp_hz_per_c, config.ki_hz_per_cs, config.period_s, span)
            for _ in range(n_pids)
        ]
        self.power_state: dict = {}
        self.os_targets_hz = np.full(n, table.f_max_hz)
        self.budget_w = config.initial_budget_w
        self.freq_now_hz = table.floor_to_level_hz(self.os_targets_hz)
        self.volt_now_v = np.empty(n)
        for domain in table.domains:
            idx = np.asarray(domain)
            self.volt_now_v[idx] = table.volt_for_freq_v(float(self.freq_now_hz[idx].max()))
        self.capping_active = False
        self.steps = 0

    def set_os_targets(self, os_targets_hz: np.ndarray):
        table = self.config.table
        self.os_targets_hz = np.asarray(os_targets_hz, dtype=float).copy()
        self.freq_now_hz = table.floor_to_level_hz(self.os_targets_hz)
        for domain in table.domains:
            idx = np.asarray(domain)
            self.volt_now_v[idx] = table.volt_for_freq_v(float(self.freq_now_hz[idx].max()))

    def tasks(self) -> list[ControlTask]:
        return [ControlTask("vote", self.config.period_s, priority=0)]

    def on_task(
        self, name: str, snapshot: SensorSnapshot, inbox: list[ScmiCommand]
    ) -> Actuation:
        cfg = self.config
        for cmd in inbox:
            new_budget = route_command(cmd, self.os_targets_hz, cfg.table, "voting-box")
            if new_budget is not None:
                self.budget_w = new_budget
        est = estimate_core_powers_w(self.params, snapshot, self.freq_now_hz, self.volt_now_v)
        t_votes = thermal_vote(snapshot.temp_c, cfg, self.pids)
        p_votes = power_vote(est, self.budget_w, cfg, self.power_state)
        self.capping_active = bool(
            self.power_state["power_ceiling_hz"] < cfg.table.f_max_hz
        )
        freqs = voting_box_select([t_votes, p_votes], self.os_targets_hz, cfg.table)
        volts = np.empty_like(freqs)
        for domain in cfg.table.domains:
            idx = np.asarray(domain)
            volts[idx] = cfg.table.volt_for_freq_v(float(freqs[idx].max()))
        self.freq_now_hz = freqs
        self.volt_now_v = volts
        self.steps += 1
        return Actuation(freq_hz=freqs.copy(), volt_v=volts.copy())
