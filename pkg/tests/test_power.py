import numpy as np
import pytest

from pcsim.power import PowerParams, compute_power_w, kappa, nominal_power_w


def _params(n=1, icc=0.0, ceff=1e-9, slope=0.0, ref=25.0, sigma=0.0):
    return PowerParams(
        icc_a=np.full(n, icc),
        ceff_base_f=np.full(n, ceff),
        variability=np.ones(n),
        noise_sigma_w=sigma,
        kappa_slope_per_c=slope,
        kappa_ref_c=ref,
    )


def test_pure_dynamic_term():
    p = _params(icc=0.0, ceff=1e-9)
    rng = np.random.default_rng(0)
    out = compute_power_w(p, 0, 1e9, 1.0, 50.0, 1.0, rng)
    assert out == pytest.approx(1.0)


def test_pure_static_term():
    p = _params(icc=2.0, ceff=1e-9)
    rng = np.random.default_rng(0)
    out = compute_power_w(p, 0, 0.0, 0.75, 50.0, 1.0, rng)
    assert out == pytest.approx(1.5)


def test_kappa_scaled_total():
    # kappa(85C) = 1.6 with slope 0.01/ref 25; static 0.75 + dynamic 2.25
    p = _params(icc=1.0, ceff=2e-9, slope=0.01, ref=25.0)
    rng = np.random.default_rng(0)
    out = compute_power_w(p, 0, 2e9, 0.75, 85.0, 1.0, rng)
    # independent scalar evaluation of the same formula
    expect = (1.0 + 0.01 * (85 - 25)) * (1.0 * 0.75 + 2e-9 * 2e9 * 0.75**2)
    assert expect == pytest.approx(4.8)
    assert out == pytest.approx(expect)


def test_noise_consumes_exactly_one_draw():
    p = _params(sigma=0.5)
    rng_a = np.random.default_rng(42)
    rng_b = np.random.default_rng(42)
    out = compute_power_w(p, 0, 1e9, 1.0, 25.0, 1.0, rng_a)
    expected_noise = rng_b.standard_normal() * 0.5
    assert out == pytest.approx(1.0 + expected_noise)
    # streams stay aligned afterwards
    assert rng_a.standard_normal() == rng_b.standard_normal()


def test_noise_off_determinism():
    p = _params(sigma=0.0)
    rng = np.random.default_rng(1)
    a = compute_power_w(p, 0, 1.5e9, 0.8, 60.0, 0.7, rng)
    b = compute_power_w(p, 0, 1.5e9, 0.8, 60.0, 0.7, rng)
    assert a == b


def test_nominal_ignores_variability():
    p = PowerParams(
        icc_a=np.array([1.0]),
        ceff_base_f=np.array([2e-9]),
        variability=np.array([1.25]),
        noise_sigma_w=0.0,
        kappa_slope_per_c=0.0,
    )
    nom = nominal_power_w(p, 2e9, 0.75, 40.0, 1.0)
    rng = np.random.default_rng(0)
    plant = compute_power_w(p, 0, 2e9, 0.75, 40.0, 1.0, rng)
    assert plant == pytest.approx(1.25 * nom[0])


def test_kappa_vectorized():
    p = _params(n=3, slope=0.02, ref=20.0)
    k = kappa(p, np.array([20.0, 30.0, 70.0]))
    assert np.allclose(k, [1.0, 1.2, 2.0])


def test_uniform_variability_seeded():
    rng1 = np.random.default_rng(9)
    rng2 = np.random.default_rng(9)
    a = PowerParams.uniform(9, 1.0, 1e-9, rng=rng1)
    b = PowerParams.uniform(9, 1.0, 1e-9, rng=rng2)
    assert np.array_equal(a.variability, b.variability)
    assert not np.allclose(a.variability, 1.0)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        _params(ceff=0.0)
    with pytest.raises(ValueError):
        PowerParams(
            icc_a=np.array([1.0]),
            ceff_base_f=np.array([1e-9]),
            variability=np.array([0.0]),
        )
