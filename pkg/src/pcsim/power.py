"""Per-core power model: static leakage plus dynamic switching power.

P_i = kappa(T_i) * (icc_i * V + ceff_i(workload) * f_i * V^2) * variability_i + noise

kappa is an affine temperature-dependence factor; variability is a fixed
per-core silicon multiplier; noise is zero-mean Gaussian drawn from the plant
RNG. Controllers use the nominal form (no variability, no noise) since the
firmware cannot know silicon-instance scatter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PowerParams:
    """Per-core power coefficients; vectors are sized to the core count."""

    icc_a: np.ndarray  # leakage current coefficient per core, amperes
    ceff_base_f: np.ndarray  # baseline effective capacitance per core, farads
    variability: np.ndarray  # per-core silicon multiplier, dimensionless
    noise_sigma_w: float = 0.05
    kappa_slope_per_c: float = 0.01
    kappa_ref_c: float = 25.0

    def __post_init__(self):
        self.icc_a = np.asarray(self.icc_a, dtype=float)
        self.ceff_base_f = np.asarray(self.ceff_base_f, dtype=float)
        self.variability = np.asarray(self.variability, dtype=float)
        if np.any(self.icc_a < 0) or np.any(self.ceff_base_f <= 0):
            raise ValueError("icc must be >= 0 and ceff_base > 0")
        if np.any(self.variability <= 0) or self.noise_sigma_w < 0:
            raise ValueError("variability must be > 0 and noise_sigma >= 0")

    @property
    def core_count(self) -> int:
        return len(self.icc_a)

    @classmethod
    def uniform(
        cls,
        core_count: int,
        icc_a: float,
        ceff_base_f: float,
        noise_sigma_w: float = 0.05,
        kappa_slope_per_c: float = 0.01,
        kappa_ref_c: float = 25.0,
        variability_sigma: float = 0.03,
        rng: np.random.Generator | None = None,
    ) -> "PowerParams":
        """Identical nominal coefficients with per-core variability drawn once."""
        if rng is None or variability_sigma == 0.0:
            var = np.ones(core_count)
        else:
            var = rng.normal(1.0, variability_sigma, size=core_count)
            var = np.clip(var, 0.5, 1.5)
        return cls(
            icc_a=np.full(core_count, icc_a),
            ceff_base_f=np.full(core_count, ceff_base_f),
            variability=var,
            noise_sigma_w=noise_sigma_w,
            kappa_slope_per_c=kappa_slope_per_c,
            kappa_ref_c=kappa_ref_c,
        )


def kappa(params: PowerParams, temp_c):
    """Affine temperature-dependence factor, 1 at the reference temperature."""
    return 1.0 + params.kappa_slope_per_c * (np.asarray(temp_c, dtype=float) - params.kappa_ref_c)


def nominal_power_w(params: PowerParams, freq_hz, volt_v, temp_c, ceff_mult):
    """Eq-form power without variability or noise (the controller's view).

    Accepts scalars or per-core vectors; broadcasting follows numpy rules.
    """
    freq_hz = np.asarray(freq_hz, dtype=float)
    volt_v = np.asarray(volt_v, dtype=float)
    ceff = params.ceff_base_f * np.asarray(ceff_mult, dtype=float)
    return kappa(params, temp_c) * (params.icc_a * volt_v + ceff * freq_hz * volt_v**2)


def compute_power_w(
    params: PowerParams,
    core: int,
    freq_hz: float,
    volt_v: float,
    temp_c: float,
    ceff_mult: float,
    rng: np.random.Generator,
) -> float:
    """Plant-side power for one core; consumes exactly one RNG draw."""
    noise = rng.standard_normal() * params.noise_sigma_w
    k = 1.0 + params.kappa_slope_per_c * (temp_c - params.kappa_ref_c)
    ceff = params.ceff_base_f[core] * ceff_mult
    base = params.icc_a[core] * volt_v + ceff * freq_hz * volt_v**2
    return k * base * params.variability[core] + noise
