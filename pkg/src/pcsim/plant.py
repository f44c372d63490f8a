"""The controlled plant: per-core power, grid-coupled temperature evolution,
retired-instruction accounting, actuator delays, and the sensor surface.

State is owned by a single stepping context; external readers only ever see
immutable SensorSnapshot copies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernel import advance_steps
from .errors import DimensionMismatch
from .opp import OperatingPointTable
from .power import PowerParams
from .thermal import ThermalModel


def quantize_floor(values, step: float):
    """Floor to the sensor quantization grid; step 0 means bit-exact."""
    if step == 0.0:
        return np.asarray(values, dtype=float).copy()
    v = np.asarray(values, dtype=float)
    return np.floor(v / step + 1e-9) * step


def performance_step(retired, carry, ipc, freq_hz, dt_s, n_steps: int = 1):
    """Accumulate retired instructions exactly, with fractional carry.

    Equal per-step increments telescope, so a window of n_steps collapses to a
    single floor against the running carry.
    """
    total = np.asarray(carry, dtype=float) + np.asarray(ipc, dtype=float) * np.asarray(
        freq_hz, dtype=float
    ) * dt_s * n_steps
    whole = np.floor(total)
    return retired + whole.astype(np.int64), total - whole


@dataclass(frozen=True)
class SensorSnapshot:
    """Quantized sensor view of the plant: per-core temperature, per-rail power,
    and the per-core workload descriptor."""

    t_s: float
    temp_c: np.ndarray  # per core, quantized
    rail_power_w: np.ndarray  # per voltage domain, quantized
    ceff_mult: np.ndarray  # per core, current workload power density
    ipc: np.ndarray  # per core, current workload IPC


@dataclass
class ActuatorDelays:
    pll_delay_s: float = 5e-6
    vrm_delay_s: float = 10e-6


class Plant:
    """Owns PlantState and advances it in dt micro-steps."""

    def __init__(
        self,
        model: ThermalModel,
        power: PowerParams,
        table: OperatingPointTable,
        seed,
        init_freq_hz: np.ndarray,
        init_volt_v: np.ndarray,
        delays: ActuatorDelays | None = None,
        temp_quant_c: float = 0.1,
        power_quant_w: float = 0.01,
    ):
        n = model.core_count
        if power.core_count != n or table.core_count != n:
            raise DimensionMismatch("thermal model, power params and table disagree on cores")
        self.model = model
        self.power = power
        self.table = table
        self.dt_s = model.dt_s
        self.delays = delays or ActuatorDelays()
        self.temp_quant_c = temp_quant_c
        self.power_quant_w = power_quant_w
        self.rng = np.random.default_rng(seed)

        self.tick = 0
        self.theta = np.zeros(n)  # temperature offsets over ambient
        self.freq_hz = np.asarray(init_freq_hz, dtype=float).copy()
        self.volt_v = np.asarray(init_volt_v, dtype=float).copy()
        table.check_setpoints(self.freq_hz, self.volt_v)
        self.last_power_w = np.zeros(n)
        self.retired = np.zeros(n, dtype=np.int64)
        self._carry = np.zeros(n)
        self._ceff_mult = np.ones(n)
        self._ipc = np.ones(n)
        self._pending_freq: tuple[int, np.ndarray] | None = None
        self._pending_volt: tuple[int, np.ndarray] | None = None

    @property
    def core_count(self) -> int:
        return self.model.core_count

    @property
    def time_s(self) -> float:
        return self.tick * self.dt_s

    @property
    def temp_c(self) -> np.ndarray:
        return self.theta + self.model.t_ambient_c

    def _to_ticks(self, delay_s: float) -> int:
        return int(round(delay_s / self.dt_s))

    def apply_setpoints(self, freq_hz: np.ndarray | None, volt_v: np.ndarray | None):
        """Request new setpoints at the current time; they take effect after the
        PLL/VRM delays. A newer request supersedes any still-pending one."""
        self.table.check_setpoints(freq_hz, volt_v)
        if freq_hz is not None:
            at = self.tick + self._to_ticks(self.delays.pll_delay_s)
            self._pending_freq = (at, np.asarray(freq_hz, dtype=float).copy())
        if volt_v is not None:
            at = self.tick + self._to_ticks(self.delays.vrm_delay_s)
            self._pending_volt = (at, np.asarray(volt_v, dtype=float).copy())
        self._fire_due_actuations()

    def _fire_due_actuations(self):
        if self._pending_freq is not None and self._pending_freq[0] <= self.tick:
            self.freq_hz = self._pending_freq[1]
            self._pending_freq = None
        if self._pending_volt is not None and self._pending_volt[0] <= self.tick:
            self.volt_v = self._pending_volt[1]
            self._pending_volt = None

    def next_actuation_tick(self) -> int | None:
        ticks = [p[0] for p in (self._pending_freq, self._pending_volt) if p is not None]
        return min(ticks) if ticks else None

    def set_workload(self, ceff_mult: np.ndarray, ipc: np.ndarray):
        n = self.core_count
        if len(ceff_mult) != n or len(ipc) != n:
            raise DimensionMismatch("workload vectors must match the core count")
        self._ceff_mult = np.asarray(ceff_mult, dtype=float)
        self._ipc = np.asarray(ipc, dtype=float)

    def _affine_power_coeffs(self):
        p = self.power
        ceff = p.ceff_base_f * self._ceff_mult
        base0 = p.icc_a * self.volt_v + ceff * self.freq_hz * self.volt_v**2
        kappa_amb = 1.0 + p.kappa_slope_per_c * (self.model.t_ambient_c - p.kappa_ref_c)
        scaled = base0 * p.variability
        return scaled * kappa_amb, scaled * p.kappa_slope_per_c

    def advance(self, n_steps: int):
        """Advance n_steps micro-steps under the current workload, honoring any
        pending actuations that fall inside the window."""
        remaining = n_steps
        while remaining > 0:
            self._fire_due_actuations()
            horizon = remaining
            nxt = self.next_actuation_tick()
            if nxt is not None and nxt - self.tick < horizon:
                horizon = nxt - self.tick
            p_base, p_slope = self._affine_power_coeffs()
            noise = self.rng.standard_normal((horizon, self.core_count)) * self.power.noise_sigma_w
            self.theta, self.last_power_w = advance_steps(
                self.theta, self.model.a, self.model.b, p_base, p_slope, noise, horizon
            )
            self.retired, self._carry = performance_step(
                self.retired, self._carry, self._ipc, self.freq_hz, self.dt_s, horizon
            )
            self.tick += horizon
            remaining -= horizon
        self._fire_due_actuations()

    def read_sensor_snapshot(self) -> SensorSnapshot:
        rails = np.array(
            [self.last_power_w[np.asarray(d)].sum() for d in self.table.domains]
        )
        return SensorSnapshot(
            t_s=self.time_s,
            temp_c=quantize_floor(self.temp_c, self.temp_quant_c),
            rail_power_w=quantize_floor(rails, self.power_quant_w),
            ceff_mult=self._ceff_mult.copy(),
            ipc=self._ipc.copy(),
        )
