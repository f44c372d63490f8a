"""Operating-point table: discrete frequency levels, per-level minimum voltage,
and the partition of cores into coarse-grained voltage domains."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, OutOfRange

# Relative slack when flooring a frequency to a table level, so that exact
# algebraic inversions do not fall one level short from float rounding.
LEVEL_TOL = 1e-9


@dataclass
class OperatingPointTable:
    levels_hz: np.ndarray  # strictly increasing
    volt_v: np.ndarray  # minimum voltage per level, non-decreasing
    domains: list[list[int]]  # every core in exactly one domain

    def __post_init__(self):
        self.levels_hz = np.asarray(self.levels_hz, dtype=float)
        self.volt_v = np.asarray(self.volt_v, dtype=float)
        if self.levels_hz.shape != self.volt_v.shape:
            raise DimensionMismatch("levels and voltages must align")
        if np.any(np.diff(self.levels_hz) <= 0):
            raise ValueError("frequency levels must be strictly increasing")
        if np.any(np.diff(self.volt_v) < 0):
            raise ValueError("voltage must be non-decreasing with frequency")
        cores = sorted(c for d in self.domains for c in d)
        if cores != list(range(len(cores))):
            raise ValueError("domains must partition cores 0..n-1")

    @property
    def f_min_hz(self) -> float:
        return float(self.levels_hz[0])

    @property
    def f_max_hz(self) -> float:
        return float(self.levels_hz[-1])

    @property
    def core_count(self) -> int:
        return sum(len(d) for d in self.domains)

    def floor_to_level_hz(self, freq_hz):
        """Largest table level <= freq (with tolerance), floored at f_min."""
        f = np.asarray(freq_hz, dtype=float)
        idx = np.searchsorted(self.levels_hz, f * (1.0 + LEVEL_TOL), side="right") - 1
        idx = np.clip(idx, 0, len(self.levels_hz) - 1)
        out = self.levels_hz[idx]
        return float(out) if np.isscalar(freq_hz) else out

    def volt_for_freq_v(self, freq_hz):
        """Minimum table voltage supporting the given frequency."""
        f = np.asarray(freq_hz, dtype=float)
        idx = np.searchsorted(self.levels_hz, f * (1.0 - LEVEL_TOL), side="left")
        idx = np.clip(idx, 0, len(self.levels_hz) - 1)
        out = self.volt_v[idx]
        return float(out) if np.isscalar(freq_hz) else out

    def check_setpoints(self, freq_hz: np.ndarray | None, volt_v: np.ndarray | None):
        """Raise OutOfRange when a requested setpoint leaves the table bounds."""
        if freq_hz is not None:
            f = np.asarray(freq_hz, dtype=float)
            lo = self.f_min_hz * (1.0 - LEVEL_TOL)
            hi = self.f_max_hz * (1.0 + LEVEL_TOL)
            if np.any(f < lo) or np.any(f > hi):
                raise OutOfRange(f"frequency outside [{self.f_min_hz:g}, {self.f_max_hz:g}] Hz")
        if volt_v is not None:
            v = np.asarray(volt_v, dtype=float)
            vlo, vhi = float(np.min(self.volt_v)), float(np.max(self.volt_v))
            if np.any(v < vlo * (1.0 - LEVEL_TOL)) or np.any(v > vhi * (1.0 + LEVEL_TOL)):
                raise OutOfRange(f"voltage outside [{vlo:g}, {vhi:g}] V")

    def domain_of(self, core: int) -> int:
        for i, d in enumerate(self.domains):
            if core in d:
                return i
        raise DimensionMismatch(f"core {core} not in any voltage domain")


def default_table(core_count: int, fixed_voltage_v: float | None = None) -> OperatingPointTable:
    """17 levels from 0.4 to 2.0 GHz in 0.1 GHz steps, three voltage bins
    (or one fixed rail voltage), all cores split into two domains."""
    levels = np.round(np.arange(0.4e9, 2.0e9 + 1, 0.1e9), 0)
    if fixed_voltage_v is not None:
        volts = np.full(len(levels), fixed_voltage_v)
    else:
        volts = np.where(levels <= 0.9e9, 0.60, np.where(levels <= 1.5e9, 0.75, 0.90))
    half = (core_count + 1) // 2
    domains = [list(range(half)), list(range(half, core_count))]
    domains = [d for d in domains if d]
    return OperatingPointTable(levels_hz=levels, volt_v=volts, domains=domains)
