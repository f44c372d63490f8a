"""Shared controller surface: periodic task descriptors, actuation records, and
the nominal power estimator both policies use.

Controllers are single sequential task machines; the harness invokes their
tasks on the configured periods (shorter period first at coincident ticks) and
forwards any drained mailbox commands to the first task due at a tick.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .opp import OperatingPointTable
from .plant import SensorSnapshot
from .power import PowerParams, nominal_power_w
from .scmi import BaseVersion, PerfLevelSet, PowerCapSet, ScmiCommand

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ControlTask:
    name: str
    period_s: float
    priority: int  # lower runs first at coincident ticks


@dataclass
class Actuation:
    freq_hz: np.ndarray | None = None
    volt_v: np.ndarray | None = None


def estimate_core_powers_w(
    params: PowerParams, snapshot: SensorSnapshot, freq_hz: np.ndarray, volt_v: np.ndarray
) -> np.ndarray:
    """Per-core power from the algebraic model at measured temperature and
    workload descriptor; no variability, no noise (the firmware's view)."""
    return nominal_power_w(params, freq_hz, volt_v, snapshot.temp_c, snapshot.ceff_mult)


def route_command(
    cmd: ScmiCommand,
    os_targets_hz: np.ndarray,
    table: OperatingPointTable,
    who: str,
) -> float | None:
    """Apply one decoded command to controller state.

    PerfLevelSet updates the OS target vector in place; PowerCapSet returns the
    new budget. Malformed or out-of-bounds commands are dropped with a
    diagnostic, never raised.
    """
    if isinstance(cmd, PowerCapSet):
        if cmd.budget_w <= 0:
            log.warning("%s: dropping power-cap command with budget %.3f W", who, cmd.budget_w)
            return None
        return cmd.budget_w
    if isinstance(cmd, PerfLevelSet):
        if not 0 <= cmd.core < len(os_targets_hz):
            log.warning("%s: dropping perf-level command for unknown core %d", who, cmd.core)
            return None
        if not table.f_min_hz <= cmd.freq_hz <= table.f_max_hz:
            log.warning(
                "%s: dropping perf-level command at %.3g Hz outside the table", who, cmd.freq_hz
            )
            return None
        os_targets_hz[cmd.core] = cmd.freq_hz
        return None
    if isinstance(cmd, BaseVersion):
        return None  # transport already answered it
    log.warning("%s: dropping unrecognized command %r", who, cmd)
    return None
