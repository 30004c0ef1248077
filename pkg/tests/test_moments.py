import numpy as np
import pytest
from dataclasses import replace

from longmv import (
    lambda_moments,
    lambda_variance_alt,
    match_no_jump_params,
    stock_moments,
)


def test_lambda_moments_at_zero(mortality):
    mp = lambda_moments(mortality, 0.0)
    assert mp.mean == mortality.lambda0
    assert mp.variance == 0.0


def test_lambda_moments_classical_cir_limit(mortality):
    # no jumps, no risk premium: reduces to textbook CIR moments
    q = replace(mortality, varrho_lambda=0.0, kappa=0.0)
    for t in (0.5, 3.0, 10.0):
        mp = lambda_moments(q, t)
        e = np.exp(-q.beta * t)
        mean = q.theta + (q.lambda0 - q.theta) * e
        var = (
            q.lambda0 * q.sigma_lambda**2 / q.beta * (e - e**2)
            + q.theta * q.sigma_lambda**2 / (2 * q.beta) * (1 - e) ** 2
        )
        assert mp.mean == pytest.approx(mean, rel=1e-12)
        assert mp.variance == pytest.approx(var, rel=1e-12)


def test_lambda_variance_ode_oracle(mortality):
    # independent derivation: RK4-integrate the exact first/second-moment ODEs
    q = mortality
    a = q.reversion_rate

    def rhs(y):
        m_t, v_t = y
        dm = q.beta * q.theta + q.varrho_lambda * q.varsigma - a * m_t
        dv = -2 * a * v_t + q.sigma_lambda**2 * m_t + 2 * q.varrho_lambda * q.varsigma**2
        return np.array([dm, dv])

    y = np.array([q.lambda0, 0.0])
    h = 1e-3
    for _ in range(int(round(10.0 / h))):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    mp = lambda_moments(q, 10.0)
    assert mp.mean == pytest.approx(y[0], rel=1e-10)
    assert mp.variance == pytest.approx(y[1], rel=1e-10)


def test_lambda_variance_alt_differs_slightly(mortality):
    # the alternate grouping deviates by ~0.3% at the baseline horizon
    mp = lambda_moments(mortality, 10.0)
    alt = lambda_variance_alt(mortality, 10.0)
    assert alt != mp.variance
    assert abs(alt / mp.variance - 1.0) < 0.01


def test_variance_nonnegative_on_sweep(mortality):
    # parameter sweep around the baseline; both evaluations must stay >= 0
    factors = (0.25, 0.5, 1.0, 2.0, 4.0)
    ts = np.linspace(0.0, 50.0, 26)
    for frl in factors:
        for fvs in factors:
            for fsl in factors:
                q = replace(
                    mortality,
                    varrho_lambda=mortality.varrho_lambda * frl,
                    varsigma=mortality.varsigma * fvs,
                    sigma_lambda=mortality.sigma_lambda * fsl,
                )
                for t in ts:
                    assert lambda_moments(q, float(t)).variance >= 0.0
                    assert lambda_variance_alt(q, float(t)) >= 0.0


def test_stock_moments_reference_values(market):
    mp = stock_moments(market, 10.0)
    assert abs(mp.mean - 1.822) <= 1e-3
    assert abs(mp.variance - 1.633) <= 1e-3


def test_stock_moments_degenerate(market):
    mp0 = stock_moments(market, 0.0)
    assert mp0.mean == market.s0 and mp0.variance == 0.0
    m_det = replace(market, sigma=1e-12, varrho_s=0.0)
    for t in (1.0, 10.0, 30.0):
        assert stock_moments(m_det, t).variance == pytest.approx(0.0, abs=1e-10)


def test_stock_mean_strictly_increasing(market):
    ts = np.linspace(0.0, 10.0, 51)
    means = [stock_moments(market, float(t)).mean for t in ts]
    assert all(b > a for a, b in zip(means, means[1:]))


def test_lambda_moments_monotone_at_baseline(mortality):
    # starting below the reversion level, both moments increase on [0, T]
    ts = np.linspace(0.0, 10.0, 51)
    pairs = [lambda_moments(mortality, float(t)) for t in ts]
    assert all(b.mean > a.mean for a, b in zip(pairs, pairs[1:]))
    assert all(b.variance > a.variance for a, b in zip(pairs, pairs[1:]))


def test_match_no_jump_stock_volatility(market, mortality):
    m2, _ = match_no_jump_params(market, mortality, 10.0)
    assert m2.sigma == pytest.approx(0.2, abs=1e-15)  # sqrt(0.01 + 0.01 * 3)
    assert m2.varrho_s == 0.0
    for t in (1.0, 5.0, 10.0, 20.0):
        a, b = stock_moments(market, t), stock_moments(m2, t)
        assert a.mean == pytest.approx(b.mean, rel=1e-12)
        assert a.variance == pytest.approx(b.variance, rel=1e-12)


def test_match_no_jump_mortality_moments(market, mortality):
    _, q2 = match_no_jump_params(market, mortality, 10.0)
    assert q2.varrho_lambda == 0.0
    target = lambda_moments(mortality, 10.0)
    got = lambda_moments(q2, 10.0)
    assert abs(got.mean - target.mean) <= 1e-10
    assert abs(got.variance - target.variance) <= 1e-10
    # beta, kappa, lambda0 held fixed
    assert (q2.beta, q2.kappa, q2.lambda0) == (mortality.beta, mortality.kappa, mortality.lambda0)


def test_match_no_jump_fixed_point(market, mortality):
    m1, q1 = match_no_jump_params(market, mortality, 10.0)
    m2, q2 = match_no_jump_params(m1, q1, 10.0)
    assert q2.theta == pytest.approx(q1.theta, abs=1e-12)
    assert q2.sigma_lambda == pytest.approx(q1.sigma_lambda, abs=1e-12)
    assert m2.sigma == m1.sigma
