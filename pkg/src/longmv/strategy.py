"""Closed-form equilibrium allocations, scenario variants and the deviation test.

The stock allocation depends on time only; the bond allocation combines
the bond coefficients at maturity T_L with the lambda-derivative and
jump integral of the correction surface.  Scenario variants bundle the
dynamics actually simulated ("market") with the parameter set the agent
uses to compute allocations ("agent"): for the jump-blind scenario the
two differ, which is the whole point of that experiment.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bond import riccati_B
from .bsurface import BSurface, Estimator, SurfaceGrid, eval_b, load_or_build
from .moments import match_no_jump_params
from .params import JumpSizeLaw, MarketParams, MortalityParams, Scenario, ScenarioSpec

_DENOM_FLOOR = 1e-14


@dataclass(frozen=True)
class Allocation:
    u_s: float  # dollars in the stock
    u_y: float  # dollars in the longevity bond (negative = short)


def ansatz_discount(t, T: float, r: float):
    """The common solution exp(r (T - t)) of the two terminal-value ODEs."""
    return np.exp(r * (np.asarray(T, dtype=float) - t))


def u_star_stock(t: float, m: MarketParams, gamma: float, T: float) -> float:
    """Equilibrium dollars in the stock: mu_excess / (total variance * gamma * e^{r(T-t)})."""
    if t > T:
        raise ValueError(f"t={t} beyond horizon T={T}")
    denom = m.total_variance_rate
    if denom <= 0:
        raise ValueError("stock has zero total variance")
    return m.mu_excess / (denom * gamma * float(ansatz_discount(t, T, m.r)))


def _u_y_core(
    lam, B: float, r2: float, d2: float, q: MortalityParams, gamma: float,
    disc: float, b_lam, b2,
):
    """Shared scalar/vector evaluation of the bond allocation.

    Uses the maturity-factored form
        u_Y = [(r1 l + r2) + gamma b_lambda d1 l - gamma b2 / B]
              / (B (d1 l + d2) gamma e^{r(T-t)}),
    and for a jump-free agent (r2 = d2 = b2 = 0) cancels the common factor
    of lambda so the allocation stays finite on the lambda = 0 boundary.
    """
    r1 = q.sigma_lambda * q.kappa
    d1 = q.sigma_lambda**2
    if q.varrho_lambda == 0:
        den = B * d1 * gamma * disc
        if den < _DENOM_FLOOR:
            raise ArithmeticError(f"bond allocation denominator {den:.3e} below floor")
        return (r1 + gamma * b_lam * d1) / den
    den = B * (d1 * lam + d2) * gamma * disc
    if np.min(den) < _DENOM_FLOOR:
        raise ArithmeticError(f"bond allocation denominator {np.min(den):.3e} below floor")
    return ((r1 * lam + r2) + gamma * b_lam * d1 * lam - gamma * b2 / B) / den


def u_star_longevity(
    t: float,
    lam: float,
    surface: BSurface,
    m: MarketParams,
    q: MortalityParams,
    gamma: float,
    T: float,
    T_L: float,
) -> float:
    """Equilibrium dollars in the longevity bond at (t, lambda).

    Negative values (short positions) are legitimate.  Rejected at t >= T
    where the allocation formula degenerates together with its horizon.
    """
    if t >= T:
        raise ValueError(f"bond allocation needs t < T (got t={t}, T={T})")
    B = riccati_B(t, T_L, q)
    u = q.varsigma * B
    r2 = q.psi2 * q.varrho_lambda * q.varsigma / (1.0 + u)
    d2 = 2.0 * q.varrho_lambda * q.varsigma**2 / ((1.0 + u) * (1.0 + 2.0 * u))
    _, b_lam, b2 = eval_b(surface, t, lam)
    disc = float(ansatz_discount(t, T, m.r))
    return float(_u_y_core(lam, B, r2, d2, q, gamma, disc, b_lam, b2))


@dataclass
class ScenarioArtifacts:
    """Everything a wealth simulation needs for one scenario."""

    variant: Scenario
    market_m: MarketParams        # dynamics actually simulated
    market_q: MortalityParams
    agent_m: MarketParams         # parameters behind the allocation rule
    agent_q: MortalityParams
    T: float
    T_L: float
    gamma: float
    p0: float
    surface: BSurface | None      # None disables the bond leg entirely

    @property
    def use_longevity(self) -> bool:
        return self.surface is not None


def prepare_scenario(
    m: MarketParams,
    q: MortalityParams,
    spec: ScenarioSpec,
    *,
    grid: SurfaceGrid | None = None,
    estimator: Estimator = Estimator.DIRECT_PSTAR,
    cache_dir=None,
    surface_seed: int = 0,
) -> ScenarioArtifacts:
    """Assemble market/agent parameters and the correction surface for a scenario."""
    T, T_L, gamma = spec.T, spec.T_L, spec.gamma

    def surf(mm, qq, maturity):
        return load_or_build(
            cache_dir, mm, qq, gamma, T, maturity,
            grid=grid, estimator=estimator, seed=surface_seed,
        )

    sc = spec.scenario
    if sc is Scenario.BASELINE:
        return ScenarioArtifacts(sc, m, q, m, q, T, T_L, gamma, spec.p0, surf(m, q, T_L))
    if sc is Scenario.NO_LONGEVITY:
        return ScenarioArtifacts(sc, m, q, m, q, T, T_L, gamma, spec.p0, None)
    if sc in (Scenario.JUMP_BLIND, Scenario.BROWNIAN_ONLY):
        m2, q2 = match_no_jump_params(m, q, T)
        blind_surface = surf(m2, q2, T_L)
        if sc is Scenario.JUMP_BLIND:
            # blind allocations applied to the true jumpy dynamics
            return ScenarioArtifacts(sc, m, q, m2, q2, T, T_L, gamma, spec.p0, blind_surface)
        return ScenarioArtifacts(sc, m2, q2, m2, q2, T, T_L, gamma, spec.p0, blind_surface)
    if sc is Scenario.NORMAL_JUMPS:
        m_n = replace(m, jump_size_law=JumpSizeLaw.STANDARD_NORMAL)
        # surface depends on the stock only through theta1 * mu_excess, which
        # the law switch preserves, so this reuses the baseline surface cache
        return ScenarioArtifacts(sc, m_n, q, m_n, q, T, T_L, gamma, spec.p0, surf(m_n, q, T_L))
    if sc is Scenario.LONG_BOND:
        return ScenarioArtifacts(sc, m, q, m, q, T, T_L, gamma, spec.p0, surf(m, q, T_L))
    raise ValueError(f"unknown scenario {sc}")


def scenario_strategy(artifacts: ScenarioArtifacts, t: float, lam: float) -> Allocation:
    """Point evaluation of the allocation rule for one scenario."""
    a = artifacts
    u_s = u_star_stock(t, a.agent_m, a.gamma, a.T)
    if not a.use_longevity:
        return Allocation(u_s=u_s, u_y=0.0)
    u_y = u_star_longevity(t, lam, a.surface, a.agent_m, a.agent_q, a.gamma, a.T, a.T_L)
    return Allocation(u_s=u_s, u_y=u_y)


@dataclass
class PerturbedEntry:
    du_s: float
    du_y: float
    j_value: float
    se_diff: float  # paired standard error of (J_star - J_perturbed)


@dataclass
class PerturbationReport:
    j_star: float
    entries: list[PerturbedEntry]

    @property
    def passed(self) -> bool:
        return all(self.j_star >= e.j_value - 2.0 * e.se_diff for e in self.entries)


def equilibrium_perturbation_check(
    artifacts: ScenarioArtifacts,
    spec: ScenarioSpec,
    *,
    epsilon: float = 0.1,
    window: float = 0.1,
    deviations: list[tuple[float, float]] | None = None,
) -> PerturbationReport:
    """Local-optimality check: constant deviations on [0, window] cannot beat the rule.

    All strategies share every market draw (common random numbers), so the
    value differences are estimated from matched pairs: with X the base
    terminal wealth and Y a perturbed one, the per-path statistic
    (X - Y) - gamma/2 * ((X - mean X)^2 - (Y - mean Y)^2) has mean
    J_star - J_perturbed and its standard error gates the comparison.
    """
    from .portfolio import simulate_terminal_wealth

    if deviations is None:
        deviations = [(epsilon, 0.0), (-epsilon, 0.0), (0.0, epsilon), (0.0, -epsilon)]
    res = simulate_terminal_wealth(
        artifacts, spec, perturbations=deviations, perturbation_window=window,
        want_terminals=True,
    )
    gamma = artifacts.gamma
    x = res.p_terminal
    j_star = float(x.mean() - 0.5 * gamma * x.var(ddof=1))
    entries = []
    xc = x - x.mean()
    for (du_s, du_y), y in zip(deviations, res.perturbed_terminals):
        j_v = float(y.mean() - 0.5 * gamma * y.var(ddof=1))
        yc = y - y.mean()
        t_stat = (x - y) - 0.5 * gamma * (xc**2 - yc**2)
        se = float(t_stat.std(ddof=1) / np.sqrt(x.size))
        entries.append(PerturbedEntry(du_s=du_s, du_y=du_y, j_value=j_v, se_diff=se))
    return PerturbationReport(j_star=j_star, entries=entries)
