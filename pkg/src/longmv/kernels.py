"""Seeded path simulation for the stock, the jump-CIR intensity and the joint system.

Paths are generated in blocks of ``BLOCK_SIZE``; each block owns an
independent RNG stream spawned from (seed, tag, block index), so results
are reproducible, independent of how many blocks a run is chunked into,
and blocks can in principle be simulated in any order.  Within a block
everything is vectorized across paths with a fixed draw order per step.

Schemes:
  * stock   -- exact multiplicative scheme for the constant-coefficient
               jump-diffusion (log-Euler with Ito and compensator terms,
               jumps applied as factors 1 + rho * x), so the deterministic
               degenerate case reproduces s0 * exp(mu * t) to machine
               precision and every price stays positive;
  * lambda  -- full-truncation Euler: drift and diffusion evaluated at
               max(state, 0), jumps added raw, reported intensity clipped
               at zero;
  * Y, Phi  -- relative-increment Euler sharing the intensity's Brownian
               and jump draws, Phi as a multiplicative stochastic
               exponential floored at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bond import CoeffTable, bond_price
from .params import JumpSizeLaw, MarketParams, MortalityParams

BLOCK_SIZE = 200_000

# tags keep draw streams of different simulators disjoint for one seed
_TAG_STOCK = 1
_TAG_JCIR = 2
_TAG_JOINT = 3
_TAG_JCIR_FAST = 4


class Measure(Enum):
    P = "P"
    Q = "Q"
    PSTAR = "Pstar"


@dataclass(frozen=True)
class PathGrid:
    t0: float
    t1: float
    n_steps: int

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError(f"grid needs t1 > t0 (got [{self.t0}, {self.t1}])")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1 (got {self.n_steps})")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.n_steps

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)


def block_rng(seed: int, tag: int, block: int) -> np.random.Generator:
    """Independent generator for one path block (splittable construction)."""
    return np.random.Generator(np.random.SFC64(np.random.SeedSequence((seed, tag, block))))


def iter_blocks(n_paths: int):
    """Yield (block_index, n_paths_in_block) covering n_paths in fixed-size blocks."""
    block = 0
    done = 0
    while done < n_paths:
        n = min(BLOCK_SIZE, n_paths - done)
        yield block, n
        block += 1
        done += n


def poisson_counts(u: np.ndarray, lam: float, kmax: int) -> np.ndarray:
    """Poisson counts by inversion of uniforms, exact up to a clamp at kmax."""
    p = np.exp(-lam)
    cdf = p
    k = np.zeros(u.shape, dtype=np.int64)
    for j in range(kmax):
        k += u >= cdf
        p *= lam / (j + 1)
        cdf += p
    return k


def _jump_batch(rng, counts: np.ndarray):
    """Owners (repeated path indices) for all jumps of one step, in path order."""
    idx = np.nonzero(counts)[0]
    if idx.size == 0:
        return idx, np.zeros(0, dtype=np.int64)
    reps = counts[idx]
    return np.repeat(idx, reps), reps


# ---------------------------------------------------------------------------
# Stock
# ---------------------------------------------------------------------------


@dataclass
class StockResult:
    terminal: np.ndarray                # S_T per path
    n_jumps: np.ndarray                 # Poisson count per path over [t0, t1]
    times: np.ndarray | None = None
    paths: np.ndarray | None = None     # (kept paths, n_steps + 1)


def _stock_block(m: MarketParams, grid: PathGrid, rng, n: int, keep: int):
    dt = grid.dt
    s = np.full(n, m.s0)
    kept = np.empty((keep, grid.n_steps + 1)) if keep else None
    if keep:
        kept[:, 0] = m.s0
    njump = np.zeros(n, dtype=np.int64)
    normal_law = m.jump_size_law is JumpSizeLaw.STANDARD_NORMAL
    drift = (m.mu - 0.5 * m.sigma**2 - m.rho * m.varrho_s * m.jump_mean) * dt
    sig_sq = m.sigma * np.sqrt(dt)
    log1p_rho = np.log1p(m.rho)
    x_floor = (-1.0 + 1e-6) / m.rho if m.rho > 0 else -np.inf

    for i in range(grid.n_steps):
        z = rng.standard_normal(n)
        log_incr = drift + sig_sq * z
        if m.varrho_s > 0:
            u = rng.random(n, dtype=np.float32)
            k = poisson_counts(u, m.varrho_s * dt, kmax=6)
            njump += k
            if normal_law:
                owners, _ = _jump_batch(rng, k)
                if owners.size:
                    x = rng.standard_normal(owners.size)
                    bad = x <= x_floor  # keeps 1 + rho * x > 0; essentially never fires
                    while bad.any():
                        x[bad] = rng.standard_normal(int(bad.sum()))
                        bad = x <= x_floor
                    jump_log = np.zeros(n)
                    np.add.at(jump_log, owners, np.log1p(m.rho * x))
                    log_incr = log_incr + jump_log
            else:
                log_incr = log_incr + k * log1p_rho
        s = s * np.exp(log_incr)
        if keep:
            kept[:, i + 1] = s[:keep]
    return s, njump, kept


def simulate_stock_path(
    m: MarketParams, grid: PathGrid, seed: int, n_paths: int, *, keep_paths: int = 0
) -> StockResult:
    """Simulate stock paths; returns terminal values and optionally the first paths."""
    if grid.dt <= 0:
        raise ValueError("grid must have positive dt")
    term = np.empty(n_paths)
    njump = np.empty(n_paths, dtype=np.int64)
    kept_all = []
    done = 0
    for block, n in iter_blocks(n_paths):
        keep = min(keep_paths - done, n) if keep_paths > done else 0
        s, nj, kept = _stock_block(m, grid, block_rng(seed, _TAG_STOCK, block), n, keep)
        term[done : done + n] = s
        njump[done : done + n] = nj
        if kept is not None:
            kept_all.append(kept)
        done += n
    paths = np.vstack(kept_all) if kept_all else None
    return StockResult(terminal=term, n_jumps=njump, times=grid.times() if paths is not None else None, paths=paths)


# ---------------------------------------------------------------------------
# Jump-CIR intensity under P, Q and P*
# ---------------------------------------------------------------------------


class GirsanovViolation(RuntimeError):
    """The jump tilt C = theta2 * eta_L reached 1; the measure change is invalid."""


@dataclass
class JcirResult:
    terminal: np.ndarray            # lambda_T (clipped at 0)
    int_lambda: np.ndarray          # trapezoid of the clipped intensity
    times: np.ndarray | None = None
    paths: np.ndarray | None = None
    jump_records: list = field(default_factory=list)  # (step, path, size) when keeping paths


def pstar_excess_rate_bound(q: MortalityParams, coeff: CoeffTable) -> float:
    """Envelope for theta2^+ * varsigma * B across states and tabulated times.

    theta2 is a Moebius function of lambda, so its supremum over lambda
    is attained at an endpoint: r1/d1 at infinity or r2/d2 at zero.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        end0 = np.where(coeff.d2 > 0, coeff.r2 / coeff.d2, 0.0)
    end_inf = coeff.r1 / coeff.d1
    sup_t2b = max(float(np.max(end0, initial=0.0)), end_inf, 0.0)
    return 1.2 * q.varsigma * sup_t2b


def _jcir_block(
    q: MortalityParams,
    measure: Measure,
    grid: PathGrid,
    rng,
    n: int,
    keep: int,
    coeff: CoeffTable | None,
    c_hat: float,
    tilt_stats: np.ndarray,
):
    dt = grid.dt
    x = np.full(n, q.lambda0)
    intlam = np.zeros(n)
    kept = np.empty((keep, grid.n_steps + 1)) if keep else None
    records: list = []
    if keep:
        kept[:, 0] = q.lambda0

    if measure is Measure.P or measure is Measure.PSTAR:
        drift_level, drift_rate = q.beta * q.theta, q.reversion_rate
        jump_rate = q.varrho_lambda
    else:  # Q
        drift_level, drift_rate = q.beta * q.theta, q.beta
        jump_rate = q.q_jump_intensity
    sig = q.sigma_lambda

    for i in range(grid.n_steps):
        xp = np.maximum(x, 0.0)
        z = rng.standard_normal(n)
        drift = drift_level - drift_rate * xp
        if measure is Measure.PSTAR:
            t2b = coeff.theta2_times_b(i, xp)
            drift = drift + t2b * q.sigma_lambda**2 * xp
        x_new = x + drift * dt + sig * np.sqrt(xp * dt) * z

        if jump_rate > 0:
            u = rng.random(n, dtype=np.float32)
            k = poisson_counts(u, jump_rate * dt, kmax=4)
            owners, _ = _jump_batch(rng, k)
            if owners.size:
                sizes = rng.standard_exponential(owners.size) * q.varsigma
                if measure is Measure.PSTAR:
                    accept_u = rng.random(owners.size)
                    B = coeff.B[i]
                    g = np.expm1(-B * sizes) / B if B > 1e-12 else -sizes
                    c_tilt = t2b[owners] * g  # theta2 * eta_L, regular at maturity
                    tilt_stats[1] += owners.size
                    bad = c_tilt >= 1.0
                    if bad.any():
                        # degenerate tilt: reject outright and count (see module notes)
                        tilt_stats[0] += int(bad.sum())
                    accepted = accept_u < (1.0 - c_tilt)
                    owners, sizes = owners[accepted], sizes[accepted]
                if owners.size:
                    add = np.zeros(n)
                    np.add.at(add, owners, sizes)
                    x_new = x_new + add
                    if keep:
                        sel = owners < keep
                        for p, sz in zip(owners[sel], sizes[sel]):
                            records.append((i, int(p), float(sz)))

        if measure is Measure.PSTAR and c_hat > 0:
            # excess jump stream: rate varrho * c_hat, sizes from a Gamma(2)
            # proposal accepted with prob theta2^+ * vs * (1 - e^{-Bx}) / (c_hat * x)
            u2 = rng.random(n, dtype=np.float32)
            k2 = poisson_counts(u2, q.varrho_lambda * c_hat * dt, kmax=3)
            owners2, _ = _jump_batch(rng, k2)
            if owners2.size:
                sizes2 = rng.gamma(2.0, q.varsigma, owners2.size)
                acc_u2 = rng.random(owners2.size)
                B = coeff.B[i]
                # (1 - e^{-Bx}) / (Bx) in (0, 1], regular at maturity
                w = -np.expm1(-B * sizes2) / (B * sizes2) if B > 1e-12 else np.ones_like(sizes2)
                alpha = np.maximum(t2b[owners2], 0.0) * q.varsigma * w / c_hat
                if np.any(alpha > 1.0 + 1e-9):
                    raise RuntimeError("excess-jump envelope violated; c_hat too small")
                accepted = acc_u2 < alpha
                if accepted.any():
                    add = np.zeros(n)
                    np.add.at(add, owners2[accepted], sizes2[accepted])
                    x_new = x_new + add

        intlam += 0.5 * dt * (xp + np.maximum(x_new, 0.0))
        x = x_new
        if keep:
            kept[:, i + 1] = np.maximum(x[:keep], 0.0)

    return np.maximum(x, 0.0), intlam, kept, records


def simulate_jcir_path(
    q: MortalityParams,
    measure: Measure,
    grid: PathGrid,
    seed: int,
    n_paths: int,
    *,
    bond_maturity: float | None = None,
    keep_paths: int = 0,
) -> JcirResult:
    """Simulate the intensity under P, Q or P*.

    P* requires ``bond_maturity`` to evaluate the mean-variance ratio that
    tilts the dynamics; the tilt's jump part is simulated exactly as the
    superposition of the base Poisson stream (thinned where the tilt
    shrinks it) and a rare excess stream (where it inflates it).
    """
    if grid.dt <= 0:
        raise ValueError("grid must have positive dt")
    coeff = None
    c_hat = 0.0
    if measure is Measure.PSTAR:
        if bond_maturity is None:
            raise ValueError("P* simulation needs bond_maturity for the theta2 evaluator")
        coeff = CoeffTable.build(grid.times()[:-1], bond_maturity, q)
        c_hat = pstar_excess_rate_bound(q, coeff)

    term = np.empty(n_paths)
    intl = np.empty(n_paths)
    kept_all, records_all = [], []
    tilt_stats = np.zeros(2, dtype=np.int64)  # [clamped, proposed]
    done = 0
    for block, n in iter_blocks(n_paths):
        keep = min(keep_paths - done, n) if keep_paths > done else 0
        lam, il, kept, recs = _jcir_block(
            q, measure, grid, block_rng(seed, _TAG_JCIR, block), n, keep, coeff, c_hat,
            tilt_stats,
        )
        term[done : done + n] = lam
        intl[done : done + n] = il
        if kept is not None:
            kept_all.append(kept)
            records_all.extend((s, p + done, sz) for s, p, sz in recs)
        done += n
    if tilt_stats[0] > 1e-3 * max(tilt_stats[1], 1):
        raise GirsanovViolation(
            f"tilt C >= 1 for {tilt_stats[0]} of {tilt_stats[1]} proposed jumps; "
            "the tilted measure is not valid at these parameters"
        )
    paths = np.vstack(kept_all) if kept_all else None
    return JcirResult(
        terminal=term,
        int_lambda=intl,
        times=grid.times() if paths is not None else None,
        paths=paths,
        jump_records=records_all,
    )


def sample_jcir_terminal(
    q: MortalityParams,
    measure: Measure,
    grid: PathGrid,
    seed: int,
    n_paths: int,
    *,
    window: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Streaming (lambda_T, int-lambda) sampler for P or Q at large path counts.

    Same full-truncation scheme as ``simulate_jcir_path`` but with draws
    pre-generated window-by-window (float32 normals/uniforms) and the
    stepping compiled, for million-path oracle runs.  Uses its own draw
    layout, so results differ bit-wise from the reference simulator at
    equal seed while agreeing in law.
    """
    from ._fast import jcir_window

    if measure is Measure.PSTAR:
        raise ValueError("streaming sampler supports P and Q only")
    level = q.beta * q.theta
    rate = q.reversion_rate if measure is Measure.P else q.beta
    jump_rate = q.varrho_lambda if measure is Measure.P else q.q_jump_intensity
    dt = grid.dt

    lam_T = np.empty(n_paths)
    int_lam = np.empty(n_paths)
    done = 0
    for block, n in iter_blocks(n_paths):
        rng = block_rng(seed, _TAG_JCIR_FAST, block)
        x = np.full(n, q.lambda0)
        il = np.zeros(n)
        i = 0
        while i < grid.n_steps:
            w = min(window, grid.n_steps - i)
            z = rng.standard_normal((w, n), dtype=np.float32)
            if jump_rate > 0:
                u = rng.random((w, n), dtype=np.float32)
                counts = poisson_counts(u, jump_rate * dt, kmax=4).astype(np.uint8)
                sizes = rng.standard_exponential(int(counts.sum())) * q.varsigma
            else:
                counts = np.zeros((w, n), dtype=np.uint8)
                sizes = np.zeros(0)
            jcir_window(x, il, z, counts, sizes, dt, level, rate, q.sigma_lambda)
            i += w
        lam_T[done : done + n] = np.maximum(x, 0.0)
        int_lam[done : done + n] = il
        done += n
    return lam_T, int_lam


# ---------------------------------------------------------------------------
# Joint (S, lambda, Y, int-lambda, Phi) engine
# ---------------------------------------------------------------------------


@dataclass
class JointState:
    s: np.ndarray
    x: np.ndarray          # intensity state before clipping
    y: np.ndarray
    intlam: np.ndarray
    phi: np.ndarray

    @property
    def lam(self) -> np.ndarray:
        return np.maximum(self.x, 0.0)


class JointEngine:
    """Step-wise evolution of the traded state under P or Q for one grid.

    The intensity and the bond value share the Brownian and jump draws;
    the stock uses independent draws.  Under P the density-process factor
    Phi (stochastic exponential of the mean-variance tilt) is maintained
    so measure-change diagnostics ride along for free.
    """

    def __init__(
        self,
        m: MarketParams,
        q: MortalityParams,
        T_L: float,
        grid: PathGrid,
        *,
        measure: Measure = Measure.P,
        with_stock: bool = True,
        with_phi: bool = True,
    ):
        if measure is Measure.PSTAR:
            raise ValueError("joint engine runs under P or Q")
        self.m, self.q, self.grid, self.measure = m, q, grid, measure
        self.with_stock = with_stock
        self.with_phi = with_phi and measure is Measure.P
        times = grid.times()
        self.coeff = CoeffTable.build(times[:-1], T_L, q)
        u = q.varsigma * self.coeff.B
        self.mean_g = -q.varsigma / (1.0 + u)          # E[eta_L]/B, regular at maturity
        self.jump_rate = q.varrho_lambda if measure is Measure.P else q.q_jump_intensity
        self.y0 = bond_price(grid.t0, T_L, q.lambda0, q, m.r)
        # stock constants (exact scheme)
        self.s_drift = (m.mu - 0.5 * m.sigma**2 - m.rho * m.varrho_s * m.jump_mean) * grid.dt
        self.s_sig = m.sigma * np.sqrt(grid.dt)
        self.s_x_floor = (-1.0 + 1e-6) / m.rho if m.rho > 0 else -np.inf

    def new_state(self, n: int) -> JointState:
        g = self.grid
        return JointState(
            s=np.full(n, self.m.s0),
            x=np.full(n, self.q.lambda0),
            y=np.full(n, self.y0),
            intlam=np.zeros(n),
            phi=np.ones(n),
        )

    def step(self, st: JointState, i: int, rng) -> tuple[np.ndarray, np.ndarray]:
        """Advance one step; returns realized relative increments (dS_rel, dY_rel)."""
        m, q, dt = self.m, self.q, self.grid.dt
        n = st.x.size
        co = self.coeff

        # --- stock (independent draws) ---
        ds_rel = None
        if self.with_stock:
            z_s = rng.standard_normal(n)
            log_incr = self.s_drift + self.s_sig * z_s
            if m.varrho_s > 0:
                u_s = rng.random(n, dtype=np.float32)
                k_s = poisson_counts(u_s, m.varrho_s * dt, kmax=6)
                if m.jump_size_law is JumpSizeLaw.STANDARD_NORMAL:
                    owners, _ = _jump_batch(rng, k_s)
                    if owners.size:
                        xj = rng.standard_normal(owners.size)
                        bad = xj <= self.s_x_floor
                        while bad.any():
                            xj[bad] = rng.standard_normal(int(bad.sum()))
                            bad = xj <= self.s_x_floor
                        jl = np.zeros(n)
                        np.add.at(jl, owners, np.log1p(m.rho * xj))
                        log_incr = log_incr + jl
                else:
                    log_incr = log_incr + k_s * np.log1p(m.rho)
            factor_s = np.exp(log_incr)
            st.s *= factor_s
            ds_rel = factor_s - 1.0

        # --- intensity + bond value + density factor (shared draws) ---
        xp = np.maximum(st.x, 0.0)
        sqrt_lam = np.sqrt(xp)
        z = rng.standard_normal(n)
        dw = np.sqrt(dt) * z

        jump_sum = np.zeros(n)
        jump_eta = np.zeros(n)
        jump_g = np.zeros(n)
        if self.jump_rate > 0:
            u = rng.random(n, dtype=np.float32)
            k = poisson_counts(u, self.jump_rate * dt, kmax=4)
            owners, _ = _jump_batch(rng, k)
            if owners.size:
                sizes = rng.standard_exponential(owners.size) * q.varsigma
                B = co.B[i]
                eta = np.expm1(-B * sizes)
                np.add.at(jump_sum, owners, sizes)
                np.add.at(jump_eta, owners, eta)
                if self.with_phi:
                    g = eta / B if B > 1e-12 else -sizes
                    np.add.at(jump_g, owners, g)

        if self.measure is Measure.P:
            drift_x = q.beta * q.theta - q.reversion_rate * xp
        else:
            drift_x = q.beta * (q.theta - xp)
        x_new = st.x + drift_x * dt + q.sigma_lambda * sqrt_lam * dw + jump_sum

        nu = co.nu_l(i, xp) if self.measure is Measure.P else 0.0
        sig_l = -co.B[i] * q.sigma_lambda * sqrt_lam
        comp = self.jump_rate * co.mean_eta[i] * dt
        dy_rel = (m.r + nu) * dt + sig_l * dw + jump_eta - comp
        st.y *= 1.0 + dy_rel

        if self.with_phi:
            t2b = co.theta2_times_b(i, xp)
            factor_phi = (
                1.0
                + t2b * q.sigma_lambda * sqrt_lam * dw
                - t2b * (jump_g - q.varrho_lambda * self.mean_g[i] * dt)
            )
            np.maximum(st.phi * factor_phi, 0.0, out=st.phi)

        st.intlam += 0.5 * dt * (xp + np.maximum(x_new, 0.0))
        st.x = x_new
        return ds_rel, dy_rel


@dataclass
class JointResult:
    s_terminal: np.ndarray | None
    lam_terminal: np.ndarray
    y_terminal: np.ndarray
    int_lambda: np.ndarray
    phi_terminal: np.ndarray | None
    times: np.ndarray | None = None
    # kept per-path records, each (n_kept, n_steps + 1)
    s_paths: np.ndarray | None = None
    lam_paths: np.ndarray | None = None
    y_paths: np.ndarray | None = None
    intlam_paths: np.ndarray | None = None
    phi_paths: np.ndarray | None = None


def simulate_joint_path(
    m: MarketParams,
    q: MortalityParams,
    T_L: float,
    grid: PathGrid,
    seed: int,
    n_paths: int,
    *,
    measure: Measure = Measure.P,
    keep_paths: int = 0,
    with_stock: bool = True,
) -> JointResult:
    """Joint simulation of (S, lambda, Y, int-lambda, Phi) on the grid."""
    engine = JointEngine(m, q, T_L, grid, measure=measure, with_stock=with_stock)
    n_keep = min(keep_paths, n_paths)
    out = JointResult(
        s_terminal=np.empty(n_paths) if with_stock else None,
        lam_terminal=np.empty(n_paths),
        y_terminal=np.empty(n_paths),
        int_lambda=np.empty(n_paths),
        phi_terminal=np.empty(n_paths) if engine.with_phi else None,
    )
    if n_keep:
        shape = (n_keep, grid.n_steps + 1)
        out.times = grid.times()
        out.s_paths = np.empty(shape) if with_stock else None
        out.lam_paths = np.empty(shape)
        out.y_paths = np.empty(shape)
        out.intlam_paths = np.empty(shape)
        out.phi_paths = np.empty(shape) if engine.with_phi else None

    done = 0
    for block, n in iter_blocks(n_paths):
        rng = block_rng(seed, _TAG_JOINT, block)
        st = engine.new_state(n)
        keep = min(n_keep - done, n) if n_keep > done else 0

        def snap(col):
            if keep:
                rows = slice(done, done + keep)
                if with_stock:
                    out.s_paths[rows, col] = st.s[:keep]
                out.lam_paths[rows, col] = st.lam[:keep]
                out.y_paths[rows, col] = st.y[:keep]
                out.intlam_paths[rows, col] = st.intlam[:keep]
                if engine.with_phi:
                    out.phi_paths[rows, col] = st.phi[:keep]

        snap(0)
        for i in range(grid.n_steps):
            engine.step(st, i, rng)
            snap(i + 1)

        sl = slice(done, done + n)
        if with_stock:
            out.s_terminal[sl] = st.s
        out.lam_terminal[sl] = st.lam
        out.y_terminal[sl] = st.y
        out.int_lambda[sl] = st.intlam
        if engine.with_phi:
            out.phi_terminal[sl] = st.phi
        done += n
    return out


def write_path_dump(path, result: JointResult) -> None:
    """CSV dump of kept joint paths: path_id, t, S, lambda, Y, int_lambda, Phi."""
    if result.lam_paths is None:
        raise ValueError("no kept paths to dump; rerun with keep_paths > 0")
    n_kept, n_cols = result.lam_paths.shape
    with open(path, "w") as fh:
        fh.write("path_id,t,S,lambda,Y,int_lambda,Phi\n")
        for p in range(n_kept):
            for j in range(n_cols):
                s_val = result.s_paths[p, j] if result.s_paths is not None else float("nan")
                phi_val = result.phi_paths[p, j] if result.phi_paths is not None else float("nan")
                fh.write(
                    f"{p},{result.times[j]:.10g},{s_val:.10g},{result.lam_paths[p, j]:.10g},"
                    f"{result.y_paths[p, j]:.10g},{result.intlam_paths[p, j]:.10g},{phi_val:.10g}\n"
                )
