"""Numba-jitted micro-step kernel for the plant hot loop.

The affine temperature dependence of the power model makes the coupled
power/thermal update exactly linear within a window of constant setpoints and
workload, so the kernel only needs the precomputed per-core affine
coefficients: u = p_base + p_slope * theta + noise.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def advance_steps(theta, a, b, p_base, p_slope, noise, n_steps):
    """Advance n_steps micro-steps; returns (theta, last_power).

    noise must be shaped (n_steps, n); numba performs no bounds checking here.
    """
    n = theta.shape[0]
    u = np.zeros(n)
    for k in range(n_steps):
        for i in range(n):
            u[i] = p_base[i] + p_slope[i] * theta[i] + noise[k, i]
        theta = a @ theta + b @ u
    return theta, u
