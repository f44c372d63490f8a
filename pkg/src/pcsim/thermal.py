"""Discrete state-space thermal model built from an RC grid.

Each core exchanges heat laterally with its 4-neighbors through r_lateral and
vertically with ambient through r_vertical; forward-Euler discretization at the
plant micro-step yields x' = A(x - T_amb) + B u + T_amb with A, B >= 0 and
spectral radius of A strictly below 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, StabilityViolation
from .floorplan import FloorplanConfig


@dataclass(frozen=True)
class RCParams:
    r_lateral_c_per_w: float = 2.0
    r_vertical_c_per_w: float = 0.8
    c_thermal_j_per_c: float = 0.005
    dt_s: float = 1e-6


@dataclass
class ThermalModel:
    a: np.ndarray  # (n, n), dimensionless per-step state matrix
    b: np.ndarray  # (n, n), degC per watt per step
    t_ambient_c: float
    dt_s: float

    @property
    def core_count(self) -> int:
        return self.a.shape[0]

    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.a))))


def build_thermal_model(
    floorplan: FloorplanConfig, rc: RCParams, t_ambient_c: float = 45.0
) -> ThermalModel:
    """Forward-Euler discretization of the 4-neighbor RC grid.

    Raises StabilityViolation if the Euler condition
    dt < c / (4/r_lateral + 1/r_vertical) fails or the resulting A is not a
    strict contraction.
    """
    if rc.dt_s <= 0 or rc.r_lateral_c_per_w <= 0 or rc.r_vertical_c_per_w <= 0:
        raise StabilityViolation("dt and resistances must be positive")
    if rc.c_thermal_j_per_c <= 0:
        raise StabilityViolation("thermal capacitance must be positive")
    limit = rc.c_thermal_j_per_c / (4.0 / rc.r_lateral_c_per_w + 1.0 / rc.r_vertical_c_per_w)
    if rc.dt_s >= limit:
        raise StabilityViolation(
            f"dt={rc.dt_s:g}s violates the Euler condition dt < {limit:g}s"
        )

    n = floorplan.core_count
    k = rc.dt_s / rc.c_thermal_j_per_c
    adj = floorplan.adjacency().astype(float)
    degree = adj.sum(axis=1)
    a = k / rc.r_lateral_c_per_w * adj
    np.fill_diagonal(a, 1.0 - k * (degree / rc.r_lateral_c_per_w + 1.0 / rc.r_vertical_c_per_w))
    b = k * np.eye(n)

    model = ThermalModel(a=a, b=b, t_ambient_c=t_ambient_c, dt_s=rc.dt_s)
    if np.any(model.a < 0.0) or model.spectral_radius() >= 1.0:
        raise StabilityViolation("constructed A is not a positive strict contraction")
    return model


def thermal_step(model: ThermalModel, temps_c: np.ndarray, powers_w: np.ndarray) -> np.ndarray:
    """One micro-step: temperatures expressed as offsets over ambient."""
    n = model.core_count
    if temps_c.shape != (n,) or powers_w.shape != (n,):
        raise DimensionMismatch(
            f"expected vectors of length {n}, got {temps_c.shape} and {powers_w.shape}"
        )
    theta = temps_c - model.t_ambient_c
    return model.a @ theta + model.b @ powers_w + model.t_ambient_c


def steady_state_temps(model: ThermalModel, powers_w: np.ndarray) -> np.ndarray:
    """Direct linear solve for the fixed point of thermal_step under constant power."""
    n = model.core_count
    if powers_w.shape != (n,):
        raise DimensionMismatch(f"expected power vector of length {n}")
    theta = np.linalg.solve(np.eye(n) - model.a, model.b @ powers_w)
    return theta + model.t_ambient_c


def slowest_time_constant_s(model: ThermalModel) -> float:
    """Time constant of the slowest decaying mode, -dt/ln(lambda_max)."""
    lam = model.spectral_radius()
    return -model.dt_s / np.log(lam)
