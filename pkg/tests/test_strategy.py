import numpy as np
import pytest
from dataclasses import replace

from longmv import (
    JumpSizeLaw,
    Scenario,
    ScenarioSpec,
    ansatz_discount,
    equilibrium_perturbation_check,
    prepare_scenario,
    scenario_strategy,
    u_star_longevity,
    u_star_stock,
)
from longmv.bsurface import SurfaceGrid, build_b_surface


def test_u_star_stock_baseline_value(market):
    # 0.04 / (0.04 * 2 * e^{0.2})
    assert u_star_stock(0.0, market, 2.0, 10.0) == pytest.approx(0.40937, abs=5e-6)


def test_u_star_stock_near_horizon_limit(market):
    limit = market.mu_excess / (market.total_variance_rate * 2.0)
    assert u_star_stock(10.0, market, 2.0, 10.0) == pytest.approx(limit, rel=1e-12)
    with pytest.raises(ValueError):
        u_star_stock(10.5, market, 2.0, 10.0)


def test_u_star_stock_gamma_scaling(market):
    assert u_star_stock(3.0, market, 4.0, 10.0) == pytest.approx(
        0.5 * u_star_stock(3.0, market, 2.0, 10.0), rel=1e-14
    )


def test_u_star_stock_diffusion_only_reduction(market):
    m0 = replace(market, varrho_s=0.0)
    merton = market.mu_excess / (market.sigma**2 * 2.0 * np.exp(market.r * 10.0))
    assert u_star_stock(0.0, m0, 2.0, 10.0) == pytest.approx(merton, rel=1e-12)


def test_u_star_longevity_zero_when_unpriced(market, mortality):
    q0 = replace(mortality, kappa=0.0, psi2=0.0)
    grid = SurfaceGrid(n_t=11, n_lambda=7, lambda_max=0.6, n_inner=300, substeps=2)
    s = build_b_surface(market, q0, 2.0, 10.0, 10.0, grid=grid, seed=1)
    u = u_star_longevity(5.0, 0.08, s, market, q0, 2.0, 10.0, 10.0)
    assert abs(u) < 1e-9


def test_u_star_longevity_gamma_scaling_and_determinism(market, mortality, small_grid):
    s2 = build_b_surface(market, mortality, 2.0, 10.0, 10.0, grid=small_grid, seed=2)
    s4 = build_b_surface(market, mortality, 4.0, 10.0, 10.0, grid=small_grid, seed=2)
    for t, lam in [(0.0, 0.05), (4.0, 0.12), (9.5, 0.02)]:
        u2 = u_star_longevity(t, lam, s2, market, mortality, 2.0, 10.0, 10.0)
        u4 = u_star_longevity(t, lam, s4, market, mortality, 4.0, 10.0, 10.0)
        assert u4 == pytest.approx(0.5 * u2, rel=1e-12)
    # bit-identical across rebuilds with the same seed
    s2b = build_b_surface(market, mortality, 2.0, 10.0, 10.0, grid=small_grid, seed=2)
    assert u_star_longevity(0.0, 0.05, s2b, market, mortality, 2.0, 10.0, 10.0) == \
        u_star_longevity(0.0, 0.05, s2, market, mortality, 2.0, 10.0, 10.0)


def test_u_star_longevity_rejects_horizon(market, mortality, small_grid):
    s = build_b_surface(market, mortality, 2.0, 10.0, 10.0, grid=small_grid, seed=3)
    with pytest.raises(ValueError):
        u_star_longevity(10.0, 0.05, s, market, mortality, 2.0, 10.0, 10.0)


def test_allocations_state_independent_in_wealth_and_stock(market, mortality, small_grid, surface_cache):
    spec = ScenarioSpec(n_paths=10, n_steps=10)
    art = prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)
    base = scenario_strategy(art, 2.0, 0.07)
    # u_s is a function of time only; u_y of (t, lambda) only
    assert scenario_strategy(art, 2.0, 0.30).u_s == base.u_s
    assert scenario_strategy(art, 2.0, 0.07).u_y == base.u_y


def test_scenario_no_longevity(market, mortality, small_grid, surface_cache):
    spec = ScenarioSpec(scenario=Scenario.NO_LONGEVITY, n_paths=10, n_steps=10)
    art = prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)
    assert not art.use_longevity
    for t, lam in [(0.0, 0.05), (7.3, 0.2)]:
        assert scenario_strategy(art, t, lam).u_y == 0.0


def test_scenario_jump_blind_keeps_stock_allocation(market, mortality, small_grid, surface_cache):
    spec = ScenarioSpec(scenario=Scenario.JUMP_BLIND, n_paths=10, n_steps=10)
    art = prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)
    assert art.market_q == mortality            # true dynamics
    assert art.agent_q.varrho_lambda == 0.0     # blind beliefs
    base_spec = ScenarioSpec(n_paths=10, n_steps=10)
    base = prepare_scenario(market, mortality, base_spec, grid=small_grid, cache_dir=surface_cache)
    for t in (0.0, 3.0, 9.9):
        assert scenario_strategy(art, t, 0.08).u_s == pytest.approx(
            scenario_strategy(base, t, 0.08).u_s, rel=1e-12
        )


def test_scenario_brownian_only_market_is_primed(market, mortality, small_grid, surface_cache):
    spec = ScenarioSpec(scenario=Scenario.BROWNIAN_ONLY, n_paths=10, n_steps=10)
    art = prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)
    assert art.market_q.varrho_lambda == 0.0
    assert art.market_m.varrho_s == 0.0
    assert art.market_m.sigma == pytest.approx(0.2)


def test_scenario_normal_jumps_stock_allocation_unchanged(market, mortality, small_grid, surface_cache):
    spec = ScenarioSpec(scenario=Scenario.NORMAL_JUMPS, n_paths=10, n_steps=10)
    art = prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)
    assert art.market_m.jump_size_law is JumpSizeLaw.STANDARD_NORMAL
    base = prepare_scenario(market, mortality, ScenarioSpec(n_paths=10, n_steps=10),
                            grid=small_grid, cache_dir=surface_cache)
    for t in (0.0, 5.0):
        assert scenario_strategy(art, t, 0.05).u_s == scenario_strategy(base, t, 0.05).u_s


def test_ansatz_discount_ode_residual(market):
    # residual of dA/dt + r A = 0 via central differences at sampled times
    r, T = market.r, 10.0
    h = 1e-6
    for t in (0.0, 2.5, 7.7, 9.99):
        dA = (ansatz_discount(t + h, T, r) - ansatz_discount(t - h, T, r)) / (2 * h)
        res = dA + r * ansatz_discount(t, T, r)
        assert abs(res) < 1e-8
    assert ansatz_discount(T, T, r) == 1.0


def test_perturbation_zero_deviation_is_exact(market, mortality, small_grid, surface_cache):
    spec = ScenarioSpec(n_paths=3000, n_steps=250, seed=17)
    art = prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)
    rep = equilibrium_perturbation_check(art, spec, deviations=[(0.0, 0.0)])
    assert rep.entries[0].j_value == rep.j_star
    assert rep.entries[0].se_diff == 0.0
    assert rep.passed


def test_perturbation_check_small_scale(market, mortality, small_grid, surface_cache):
    spec = ScenarioSpec(n_paths=20_000, n_steps=500, seed=18)
    art = prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)
    rep = equilibrium_perturbation_check(art, spec, epsilon=0.1, window=0.1)
    assert rep.passed
    # deviations should not look better than the equilibrium beyond noise
    assert all(e.j_value <= rep.j_star + 2 * e.se_diff for e in rep.entries)


def test_perturbation_check_high_risk_aversion(market, mortality, small_grid, surface_cache):
    # gamma = 200: the value is variance-dominated, allocations shrink as 1/gamma,
    # and the equilibrium still survives its own deviation test
    spec = ScenarioSpec(gamma=200.0, n_paths=20_000, n_steps=500, seed=19)
    art = prepare_scenario(market, mortality, spec, grid=small_grid, cache_dir=surface_cache)
    rep = equilibrium_perturbation_check(art, spec, epsilon=0.1, window=0.1)
    assert rep.passed
    assert abs(scenario_strategy(art, 0.0, 0.05).u_s) < 0.01
