import numpy as np
import pytest
from dataclasses import replace

from longmv import (
    ScenarioSpec,
    ansatz_consistency_check,
    prepare_scenario,
    simulate_terminal_wealth,
    step_wealth,
    summarize_terminal,
    value_function_report,
)
from longmv.bsurface import SurfaceGrid


@pytest.fixture(scope="module")
def baseline_art(market, mortality, small_grid, surface_cache):
    spec = ScenarioSpec(n_paths=10, n_steps=10)
    return prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)


def test_step_wealth_hand_example():
    p = step_wealth(1.0, 0.5, 0.2, 0.01, -0.005, 0.02, 0.004)
    assert p == pytest.approx(1.004024, abs=1e-12)


def test_step_wealth_all_assets_earn_riskless():
    r, dt = 0.02, 0.004
    for u_s, u_y in [(0.0, 0.0), (0.5, 0.2), (-1.0, 3.0)]:
        p = step_wealth(1.0, u_s, u_y, r * dt, r * dt, r, dt)
        assert p == pytest.approx(1.0 * (1 + r * dt), rel=1e-14)


def test_riskless_portfolio_exact(baseline_art):
    spec = ScenarioSpec(n_paths=8, n_steps=2500, seed=3)
    res = simulate_terminal_wealth(baseline_art, spec, riskless_only=True)
    assert res.summary.mean_pt == pytest.approx(np.exp(0.2), rel=1e-12)
    assert res.summary.var_pt == pytest.approx(0.0, abs=1e-24)


def test_reproducibility_bitwise(baseline_art):
    spec = ScenarioSpec(n_paths=5000, n_steps=100, seed=4)
    a = simulate_terminal_wealth(baseline_art, spec)
    b = simulate_terminal_wealth(baseline_art, spec)
    assert a.summary == b.summary


def test_self_financing_identity_on_logged_paths(baseline_art):
    spec = ScenarioSpec(n_paths=50, n_steps=250, seed=5)
    res = simulate_terminal_wealth(baseline_art, spec, dump_paths=20)
    d = res.dump
    r = baseline_art.market_m.r
    dt = 10.0 / spec.n_steps
    growth = np.expm1(r * dt)
    ds_rel = d.s[:, 1:] / d.s[:, :-1] - 1.0
    dy_rel = d.y[:, 1:] / d.y[:, :-1] - 1.0
    recon = (
        d.p[:, :-1]
        + d.u_s * ds_rel
        + d.u_y * dy_rel
        + (d.p[:, :-1] - d.u_s - d.u_y) * growth
    )
    assert np.max(np.abs(recon - d.p[:, 1:])) < 1e-10


def test_summarize_terminal_statistics():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    s = summarize_terminal(x, 10.0)
    assert s.mean_pt == 2.5
    assert s.var_pt == pytest.approx(np.var(x, ddof=1))
    assert s.roer == pytest.approx(np.log(2.5) / 10.0)
    assert s.n_paths_used == 4
    neg = summarize_terminal(np.array([-1.0, -2.0, 0.5]), 10.0)
    assert neg.roer is None


def test_value_function_report_riskless(market, mortality, baseline_art):
    spec = ScenarioSpec(n_paths=16, n_steps=500, seed=6)
    res = simulate_terminal_wealth(baseline_art, spec, riskless_only=True)
    v = res.summary.mean_pt - 0.5 * 2.0 * res.summary.var_pt
    assert v == pytest.approx(np.exp(0.2), rel=1e-12)


def test_value_function_report_baseline(baseline_art):
    spec = ScenarioSpec(n_paths=30_000, n_steps=500, seed=7)
    rep = value_function_report(baseline_art, spec)
    assert rep.v_hat == pytest.approx(rep.mean_pt - rep.var_pt, rel=1e-12)  # gamma = 2
    # the residual is the Monte Carlo error of the mean against the ansatz
    assert abs(rep.residual) < 0.01


def test_gamma_to_zero_limit(baseline_art):
    # definitional limit at a fixed strategy: the variance penalty vanishes
    spec = ScenarioSpec(gamma=1e-9, n_paths=2000, n_steps=100, seed=8)
    res = simulate_terminal_wealth(baseline_art, spec, riskless_only=True)
    v_hat = res.summary.mean_pt - 0.5 * spec.gamma * res.summary.var_pt
    assert v_hat == pytest.approx(res.summary.mean_pt, rel=1e-12)


def test_ansatz_check_at_horizon(baseline_art):
    spec = ScenarioSpec(n_paths=100, n_steps=100)
    rep = ansatz_consistency_check(baseline_art, spec, t0=10.0)
    assert rep.predicted == rep.mc_mean == 1.0
    assert rep.passed


def test_ansatz_check_unpriced_longevity(market, mortality, surface_cache):
    # kappa = psi2 = 0: g = e^{rT} p0 + theta1 mu_ex T / gamma in closed form
    q0 = replace(mortality, kappa=0.0, psi2=0.0)
    grid = SurfaceGrid(n_t=11, n_lambda=7, lambda_max=0.6, n_inner=300, substeps=2)
    spec = ScenarioSpec(n_paths=40_000, n_steps=500, seed=9)
    art = prepare_scenario(market, q0, spec, grid=grid, cache_dir=surface_cache)
    rep = ansatz_consistency_check(art, spec)
    assert rep.predicted == pytest.approx(np.exp(0.2) + 0.2, rel=1e-9)
    assert rep.passed


def test_ansatz_check_interior_start(market, mortality, small_grid, surface_cache):
    spec = ScenarioSpec(n_paths=40_000, n_steps=500, seed=10)
    art = prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)
    rep = ansatz_consistency_check(art, spec, t0=4.0, lam0=0.09, p0=1.3)
    assert rep.passed


def test_perturbed_runs_share_market_draws(baseline_art):
    spec = ScenarioSpec(n_paths=4000, n_steps=200, seed=11)
    res = simulate_terminal_wealth(
        baseline_art, spec, perturbations=[(0.0, 0.0), (0.05, 0.0)],
        perturbation_window=0.5, want_terminals=True,
    )
    # zero deviation reproduces the base terminal wealth exactly
    assert np.array_equal(res.perturbed_terminals[0], res.p_terminal)
    assert not np.array_equal(res.perturbed_terminals[1], res.p_terminal)
