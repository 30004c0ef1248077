import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings, strategies as st

from longmv import (
    CoeffTable,
    Measure,
    MortalityParams,
    PathGrid,
    bond_price,
    cir_A,
    jump_correction_alpha,
    riccati_B,
    riccati_residual,
    simulate_jcir_path,
    survival_factor,
    theta2,
    y_coeffs,
)
from longmv.bond import eta_tilde_closed, eta_tilde_quad


def test_terminal_conditions(mortality):
    assert riccati_B(10.0, 10.0, mortality) == 0.0
    assert cir_A(10.0, 10.0, mortality) == 1.0
    assert jump_correction_alpha(10.0, 10.0, mortality) == 1.0
    assert bond_price(10.0, 10.0, 0.07, mortality, 0.02) == 1.0


def test_riccati_B_deterministic_limit(mortality):
    q = replace(mortality, sigma_lambda=1e-9)
    tau = 7.0
    assert riccati_B(3.0, 10.0, q) == pytest.approx((1 - np.exp(-q.beta * tau)) / q.beta, rel=1e-6)


def test_riccati_B_against_rk4(mortality):
    # integrate dB/dtau = 1 - beta * B - sigma^2/2 * B^2 from B(0) = 0
    q = mortality
    h = 1e-4
    n = int(round(10.0 / h))
    b = 0.0

    def f(x):
        return 1.0 - q.beta * x - 0.5 * q.sigma_lambda**2 * x * x

    for _ in range(n):
        k1 = f(b)
        k2 = f(b + 0.5 * h * k1)
        k3 = f(b + 0.5 * h * k2)
        k4 = f(b + h * k3)
        b += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    assert abs(riccati_B(0.0, 10.0, q) - b) < 1e-8


def test_riccati_residual_small(mortality):
    ts = np.linspace(0.0, 10.0, 101)
    assert np.max(np.abs(riccati_residual(ts, 10.0, mortality))) < 1e-8


def test_riccati_rejects_beyond_maturity(mortality):
    with pytest.raises(ValueError):
        riccati_B(10.5, 10.0, mortality)


def test_cir_A_theta_zero(mortality):
    q = replace(mortality, theta=0.0)
    for t in (0.0, 4.0, 9.9):
        assert cir_A(t, 10.0, q) == 1.0


def test_alpha_no_jumps(mortality):
    assert jump_correction_alpha(0.0, 10.0, replace(mortality, varrho_lambda=0.0)) == 1.0


def test_zero_intensity_bond_is_par():
    q = MortalityParams(theta=1e-300, lambda0=1e-300, varrho_lambda=0.0)
    assert bond_price(0.0, 10.0, 0.0, q, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_bond_price_rejects_negative_lambda(mortality):
    with pytest.raises(ValueError):
        bond_price(0.0, 10.0, -0.01, mortality, 0.02)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(0.0, 10.0), lam=st.floats(0.0, 1.0))
def test_bond_price_in_unit_interval(t, lam):
    q = MortalityParams()
    p = bond_price(t, 10.0, lam, q, 0.02)
    assert 0.0 < p <= 1.0


def test_bond_price_increases_to_par_at_zero_intensity(mortality):
    ts = np.linspace(0.0, 10.0, 41)
    prices = [bond_price(float(t), 10.0, 0.0, mortality, 0.02) for t in ts]
    assert all(b > a for a, b in zip(prices, prices[1:]))
    assert prices[-1] == 1.0


def test_pure_cir_bond_against_monte_carlo(mortality):
    q = replace(mortality, varrho_lambda=0.0)
    grid = PathGrid(0.0, 10.0, 2500)
    res = simulate_jcir_path(q, Measure.Q, grid, seed=101, n_paths=100_000)
    mc = np.exp(-res.int_lambda).mean()
    closed = cir_A(0.0, 10.0, q) * np.exp(-riccati_B(0.0, 10.0, q) * q.lambda0)
    assert abs(mc / closed - 1.0) < 5e-3


def test_full_bond_against_monte_carlo(mortality):
    grid = PathGrid(0.0, 10.0, 2500)
    res = simulate_jcir_path(mortality, Measure.Q, grid, seed=102, n_paths=100_000)
    mc = np.exp(-res.int_lambda).mean()
    assert abs(mc / survival_factor(0.0, 10.0, mortality.lambda0, mortality) - 1.0) < 5e-3


def test_y_coeffs_vanish_at_maturity(mortality):
    c = y_coeffs(10.0, 0.08, 10.0, mortality)
    assert c.nu_l == 0.0 and c.sigma_l == 0.0 and c.eta_tilde == 0.0
    assert c.eta_l(0.01) == 0.0


def test_y_coeffs_zero_risk_premia(mortality):
    q = replace(mortality, kappa=0.0, psi2=0.0)
    assert y_coeffs(0.0, 0.08, 10.0, q).nu_l == 0.0


def test_y_coeffs_signs(mortality):
    c = y_coeffs(0.0, mortality.lambda0, 10.0, mortality)
    assert c.nu_l > 0.0          # positive risk premium at the baseline calibration
    assert c.sigma_l < 0.0
    assert -1.0 < c.eta_l(0.005) <= 0.0
    assert c.eta_tilde >= 0.0


def test_eta_tilde_closed_form_vs_quadrature(mortality):
    for t in (0.0, 2.5, 7.0, 9.5):
        B = riccati_B(t, 10.0, mortality)
        closed = eta_tilde_closed(B, mortality)
        quad = eta_tilde_quad(B, mortality)
        assert closed == pytest.approx(quad, rel=1e-8, abs=1e-16)


def test_theta2_examples(mortality):
    assert theta2(0.0, mortality.lambda0, 10.0, replace(mortality, kappa=0.0, psi2=0.0)) == 0.0
    v = theta2(0.0, mortality.lambda0, 10.0, mortality)
    assert np.isfinite(v) and v > 0.0
    # lambda = 0 isolates the jump-premium part and stays finite
    v0 = theta2(0.0, 0.0, 10.0, mortality)
    assert np.isfinite(v0) and v0 < 0.0
    with pytest.raises(ValueError):
        theta2(10.0, 0.05, 10.0, mortality)


def test_theta2_denominator_quadrature_cross_check(mortality):
    # rebuild the ratio with the quadrature eta_tilde instead of the closed form
    q = mortality
    for t in (0.0, 5.0, 9.0):
        B = riccati_B(t, 10.0, q)
        c = y_coeffs(t, q.lambda0, 10.0, q)
        quad_ratio = c.nu_l / (c.sigma_l**2 + eta_tilde_quad(B, q))
        assert theta2(t, q.lambda0, 10.0, q) == pytest.approx(quad_ratio, rel=1e-8)


def test_coeff_table_matches_pointwise(mortality):
    times = np.linspace(0.0, 10.0, 11)
    co = CoeffTable.build(times, 10.0, mortality)
    for i, t in enumerate(times[:-1]):
        c = y_coeffs(float(t), 0.08, 10.0, mortality)
        assert co.nu_l(i, 0.08) == pytest.approx(c.nu_l, rel=1e-12)
        assert co.eta_tilde[i] == pytest.approx(c.eta_tilde, rel=1e-12)
        assert co.theta2_times_b(i, 0.08) == pytest.approx(
            theta2(float(t), 0.08, 10.0, mortality) * co.B[i], rel=1e-12
        )
