"""Wealth-path simulation, terminal-wealth statistics and consistency oracles.

Allocations are evaluated at the left endpoint of every step (so the
rule is predictable) and applied to the realized relative increments of
the stock and the bond value, with the residual earning the riskless
rate.  The riskless leg compounds with the exact per-step factor
e^{r dt} - 1, so the all-cash portfolio reproduces p0 * e^{rT} to
floating-point accumulation accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bond import CoeffTable
from .bsurface import eval_b
from .kernels import _TAG_JOINT, JointEngine, PathGrid, block_rng, iter_blocks
from .params import ScenarioSpec, SimSummary
from .strategy import ScenarioArtifacts, _DENOM_FLOOR, ansatz_discount, u_star_stock


def step_wealth(p, u_s, u_y, ds_rel, dy_rel, r: float, dt: float):
    """One self-financing wealth step:

    p' = p + u_s * ds_rel + u_y * dy_rel + (p - u_s - u_y) * r * dt.
    """
    return p + u_s * ds_rel + u_y * dy_rel + (p - u_s - u_y) * r * dt


def summarize_terminal(p_t: np.ndarray, T: float) -> SimSummary:
    """Mean, unbiased variance, ROER and 95% half-widths of terminal wealth."""
    n = p_t.size
    mean = float(p_t.mean())
    var = float(p_t.var(ddof=1)) if n > 1 else 0.0
    centered = p_t - mean
    m4 = float((centered**4).mean())
    ci_mean = 1.96 * np.sqrt(var / n)
    ci_var = 1.96 * np.sqrt(max(m4 - var**2, 0.0) / n)
    roer = float(np.log(mean) / T) if mean > 0 else None
    return SimSummary(
        mean_pt=mean, var_pt=var, roer=roer,
        ci_mean_halfwidth=float(ci_mean), ci_var_halfwidth=float(ci_var),
        n_paths_used=n,
    )


class _StrategyTables:
    """Per-run precomputation: stock allocation, bond coefficients and surface rows."""

    def __init__(self, artifacts: ScenarioArtifacts, grid: PathGrid):
        a = artifacts
        times = grid.times()[:-1]
        self.disc = np.asarray(ansatz_discount(times, a.T, a.market_m.r))
        self.u_s = np.array([u_star_stock(float(t), a.agent_m, a.gamma, a.T) for t in times])
        self.gamma = a.gamma
        self.use_longevity = a.use_longevity
        if a.use_longevity:
            q = a.agent_q
            co = CoeffTable.build(times, a.T_L, q)
            self.B, self.r2, self.d2 = co.B, co.r2, co.d2
            self.r1, self.d1 = co.r1, co.d1
            self.jumpless_agent = q.varrho_lambda == 0
            surf = a.surface
            self.lam_nodes = surf.lambda_nodes
            self.b_lam_rows = surf.interp_rows(times, surf.b_lambda)
            self.b2_rows = surf.interp_rows(times, surf.b2)
            self.extrapolations = 0

    def _lerp(self, row: np.ndarray, lam: np.ndarray) -> np.ndarray:
        nodes = self.lam_nodes
        dx = nodes[1] - nodes[0]
        pos = lam / dx
        i = np.clip(pos.astype(np.int64), 0, nodes.size - 2)
        frac = pos - i
        self.extrapolations += int(np.count_nonzero(pos > nodes.size - 1))
        return row[i] * (1.0 - frac) + row[i + 1] * frac

    def u_y(self, i: int, lam: np.ndarray) -> np.ndarray:
        """Vectorized bond allocation at step i for intensities lam (>= 0)."""
        if not self.use_longevity:
            return np.zeros_like(lam)
        b_lam = self._lerp(self.b_lam_rows[i], lam)
        gamma, disc = self.gamma, self.disc[i]
        B = self.B[i]
        if self.jumpless_agent:
            den = B * self.d1 * gamma * disc
            if den < _DENOM_FLOOR:
                raise ArithmeticError(f"bond allocation denominator {den:.3e} below floor")
            return (self.r1 + gamma * b_lam * self.d1) / den
        b2 = self._lerp(self.b2_rows[i], lam)
        den = B * (self.d1 * lam + self.d2[i]) * gamma * disc
        if den.min() < _DENOM_FLOOR:
            raise ArithmeticError(f"bond allocation denominator {den.min():.3e} below floor")
        return ((self.r1 * lam + self.r2[i]) + gamma * b_lam * self.d1 * lam - gamma * b2 / B) / den


@dataclass
class WealthDump:
    """Logged state of the first paths; allocations are per step (left endpoints)."""

    times: np.ndarray
    p: np.ndarray
    u_s: np.ndarray
    u_y: np.ndarray
    s: np.ndarray
    lam: np.ndarray
    y: np.ndarray
    int_lambda: np.ndarray
    phi: np.ndarray


@dataclass
class RunResult:
    summary: SimSummary
    p_terminal: np.ndarray | None = None
    perturbed_terminals: list = None
    perturbed_summaries: list = None
    dump: WealthDump | None = None


def simulate_terminal_wealth(
    artifacts: ScenarioArtifacts,
    spec: ScenarioSpec,
    *,
    perturbations: list[tuple[float, float]] | None = None,
    perturbation_window: float = 0.0,
    dump_paths: int = 0,
    want_terminals: bool = False,
    riskless_only: bool = False,
    t0: float = 0.0,
    lam0: float | None = None,
    p0: float | None = None,
) -> RunResult:
    """Simulate terminal wealth under a scenario's allocation rule.

    Perturbed variants add constant (du_s, du_y) to the allocation while
    t < t0 + perturbation_window and share every market draw with the
    base run.  ``t0 > 0`` starts the market at (t0, lam0) with the
    matching bond value, which the ansatz oracle uses.
    """
    a = artifacts
    if t0 >= a.T:
        raise ValueError(f"t0={t0} must be < T={a.T}")
    q_mkt = a.market_q if lam0 is None else replace(a.market_q, lambda0=lam0)
    grid = PathGrid(t0, a.T, spec.n_steps)
    engine = JointEngine(
        a.market_m, q_mkt, a.T_L, grid, with_stock=True, with_phi=dump_paths > 0
    )
    tables = _StrategyTables(a, grid)
    perturbations = perturbations or []
    n_window = int(np.ceil(perturbation_window / grid.dt - 1e-12)) if perturbations else 0
    riskless = float(np.expm1(a.market_m.r * grid.dt))
    start_wealth = a.p0 if p0 is None else p0

    n_paths = spec.n_paths
    p_term = np.empty(n_paths)
    pert_term = [np.empty(n_paths) for _ in perturbations]
    dump = None
    n_keep = min(dump_paths, n_paths)
    if n_keep:
        shape_state = (n_keep, spec.n_steps + 1)
        shape_alloc = (n_keep, spec.n_steps)
        dump = WealthDump(
            times=grid.times(),
            p=np.empty(shape_state), u_s=np.empty(shape_alloc), u_y=np.empty(shape_alloc),
            s=np.empty(shape_state), lam=np.empty(shape_state), y=np.empty(shape_state),
            int_lambda=np.empty(shape_state), phi=np.empty(shape_state),
        )

    done = 0
    for block, n in iter_blocks(n_paths):
        rng = block_rng(spec.seed, _TAG_JOINT, block)
        st = engine.new_state(n)
        p = np.full(n, float(start_wealth))
        p_pert = [np.full(n, float(start_wealth)) for _ in perturbations]
        keep = min(n_keep - done, n) if n_keep > done else 0
        if keep:
            rows = slice(done, done + keep)
            dump.p[rows, 0] = p[:keep]
            dump.s[rows, 0] = st.s[:keep]
            dump.lam[rows, 0] = st.lam[:keep]
            dump.y[rows, 0] = st.y[:keep]
            dump.int_lambda[rows, 0] = st.intlam[:keep]
            dump.phi[rows, 0] = st.phi[:keep]

        for i in range(spec.n_steps):
            lam_pre = st.lam
            if riskless_only:
                u_s = 0.0
                u_y = np.zeros(n)
            else:
                u_s = tables.u_s[i]
                u_y = tables.u_y(i, lam_pre)
            ds_rel, dy_rel = engine.step(st, i, rng)
            p = p + u_s * ds_rel + u_y * dy_rel + (p - u_s - u_y) * riskless
            for k_p, (du_s, du_y) in enumerate(perturbations):
                us_k, uy_k = (u_s + du_s, u_y + du_y) if i < n_window else (u_s, u_y)
                pp = p_pert[k_p]
                p_pert[k_p] = pp + us_k * ds_rel + uy_k * dy_rel + (pp - us_k - uy_k) * riskless
            if keep:
                rows = slice(done, done + keep)
                dump.u_s[rows, i] = u_s
                dump.u_y[rows, i] = u_y[:keep]
                dump.p[rows, i + 1] = p[:keep]
                dump.s[rows, i + 1] = st.s[:keep]
                dump.lam[rows, i + 1] = st.lam[:keep]
                dump.y[rows, i + 1] = st.y[:keep]
                dump.int_lambda[rows, i + 1] = st.intlam[:keep]
                dump.phi[rows, i + 1] = st.phi[:keep]

        p_term[done : done + n] = p
        for k_p in range(len(perturbations)):
            pert_term[k_p][done : done + n] = p_pert[k_p]
        done += n

    horizon = a.T - t0
    return RunResult(
        summary=summarize_terminal(p_term, horizon),
        p_terminal=p_term if (want_terminals or perturbations) else None,
        perturbed_terminals=pert_term,
        perturbed_summaries=[summarize_terminal(x, horizon) for x in pert_term],
        dump=dump,
    )


@dataclass
class AnsatzReport:
    predicted: float     # e^{r(T-t0)} p0 + b(t0, lambda0)
    mc_mean: float
    tolerance: float     # CI half-width plus the surface's own standard error
    surface_se: float

    @property
    def passed(self) -> bool:
        return abs(self.predicted - self.mc_mean) <= self.tolerance


def ansatz_consistency_check(
    artifacts: ScenarioArtifacts,
    spec: ScenarioSpec,
    *,
    t0: float = 0.0,
    lam0: float | None = None,
    p0: float | None = None,
) -> AnsatzReport:
    """Expected terminal wealth from the ansatz versus the Monte Carlo mean."""
    a = artifacts
    lam0 = a.market_q.lambda0 if lam0 is None else lam0
    p0 = a.p0 if p0 is None else p0
    b_val, _, _ = eval_b(a.surface, t0, lam0)
    predicted = float(ansatz_discount(t0, a.T, a.market_m.r)) * p0 + b_val
    if t0 >= a.T:  # degenerate horizon: both sides are the initial wealth
        return AnsatzReport(predicted=predicted, mc_mean=p0, tolerance=0.0, surface_se=0.0)
    # interpolate the surface's standard error at (t0, lam0)
    j, w = a.surface.row_weights(t0)
    se_row = (1.0 - w) * a.surface.se[j] + w * a.surface.se[j + 1]
    se_b = float(np.interp(lam0, a.surface.lambda_nodes, se_row))
    n_steps = max(1, round(spec.n_steps * (a.T - t0) / a.T))
    res = simulate_terminal_wealth(
        artifacts, replace(spec, n_steps=n_steps), t0=t0, lam0=lam0, p0=p0
    )
    return AnsatzReport(
        predicted=predicted,
        mc_mean=res.summary.mean_pt,
        tolerance=res.summary.ci_mean_halfwidth + 1.96 * se_b,
        surface_se=se_b,
    )


@dataclass
class ValueReport:
    v_hat: float           # mean - gamma/2 * variance of terminal wealth
    mean_pt: float
    var_pt: float
    g_ansatz: float        # e^{rT} p0 + b(0, lambda0)
    residual: float        # v_hat - (g_ansatz - gamma/2 var) = mean - g_ansatz


def value_function_report(artifacts: ScenarioArtifacts, spec: ScenarioSpec) -> ValueReport:
    """Monte Carlo equilibrium value and its ansatz decomposition."""
    res = simulate_terminal_wealth(artifacts, spec)
    mean, var = res.summary.mean_pt, res.summary.var_pt
    v_hat = mean - 0.5 * artifacts.gamma * var
    b_val, _, _ = eval_b(artifacts.surface, 0.0, artifacts.market_q.lambda0)
    g_ansatz = float(ansatz_discount(0.0, artifacts.T, artifacts.market_m.r)) * artifacts.p0 + b_val
    return ValueReport(
        v_hat=v_hat, mean_pt=mean, var_pt=var, g_ansatz=g_ansatz,
        residual=v_hat - (g_ansatz - 0.5 * artifacts.gamma * var),
    )


def write_wealth_dump(path, dump: WealthDump) -> None:
    """CSV of logged wealth paths: path_id, t, S, lambda, Y, int_lambda, Phi."""
    n_kept, n_cols = dump.p.shape
    with open(path, "w") as fh:
        fh.write("path_id,t,S,lambda,Y,int_lambda,Phi\n")
        for p_i in range(n_kept):
            for j in range(n_cols):
                fh.write(
                    f"{p_i},{dump.times[j]:.10g},{dump.s[p_i, j]:.10g},{dump.lam[p_i, j]:.10g},"
                    f"{dump.y[p_i, j]:.10g},{dump.int_lambda[p_i, j]:.10g},{dump.phi[p_i, j]:.10g}\n"
                )
