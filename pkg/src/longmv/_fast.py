"""Numba inner loops for the heavy Monte Carlo work.

All randomness is pre-generated with numpy generators and passed in as
arrays, so the kernels are pure arithmetic: reproducibility is owned by
the callers' seed handling, and the kernels stay deterministic given
their inputs.  Jump draws arrive as per-(step, path) counts plus flat
pools ordered like counts.ravel(), walked by offset arrays or a cursor.

State layout for the surface-row kernels: one row simulates all
lambda-grid nodes with common random numbers, states flattened as
[node * n_inner + path]; every draw row is indexed by the path only,
so all nodes see identical noise.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def jcir_window(x, intlam, z, counts, sizes, dt, level, rate, sig):
    """Full-truncation Euler steps with raw compound-Poisson jumps.

    x, intlam: per-path state (modified in place); z: (n_steps, n) normals;
    counts: (n_steps, n) jump counts; sizes: flat pool in counts.ravel() order.
    Drift is level - rate * max(x, 0).
    """
    n_steps, n = z.shape
    cur = 0
    for i in range(n_steps):
        for p in range(n):
            xp = x[p] if x[p] > 0.0 else 0.0
            xn = x[p] + (level - rate * xp) * dt + sig * np.sqrt(xp * dt) * z[i, p]
            for _ in range(counts[i, p]):
                xn += sizes[cur]
                cur += 1
            xnp = xn if xn > 0.0 else 0.0
            intlam[p] += 0.5 * dt * (xp + xnp)
            x[p] = xn
    return cur


@njit(cache=True)
def surface_row_pstar(
    x,
    f_prev,
    acc,
    z,
    counts1,
    off1,
    sizes1,
    accu1,
    counts2,
    off2,
    sizes2,
    accu2,
    B,
    r2,
    d2,
    r1,
    d1,
    dt,
    level,
    rate,
    sig,
    vs,
    c_hat,
    n_inner,
    err,
):
    """Tilted-dynamics ensemble for one surface row.

    Accumulates the trapezoid of theta2 * nu_L along each path into acc.
    The tilt's jump measure (1 - theta2 * eta_L) * base is simulated as
    the base stream thinned by the acceptance 1 - theta2 * eta_L (one
    comparison; automatically always-accept where the tilt inflates) plus
    a rare excess stream from a Gamma(2) proposal.

    A proposed jump with tilt C = theta2 * eta_L >= 1 has no valid
    acceptance probability (the changed measure degenerates there); it is
    rejected outright and counted in err[0] so the caller can decide
    whether the rate is tolerable.  err[1] counts envelope violations of
    the excess stream; err[2]/err[3] record the substep and state index
    of the first event, err[4] counts all base-stream proposals.
    """
    n_sub = z.shape[0]
    n_tot = x.size
    sig2 = sig * sig
    for s in range(n_sub):
        Bs = B[s]
        r2s = r2[s]
        d2s = d2[s]
        r2n = r2[s + 1]
        d2n = d2[s + 1]
        Bn_small = Bs <= 1e-12
        for idx in range(n_tot):
            p = idx % n_inner
            xi = x[idx]
            xp = xi if xi > 0.0 else 0.0
            den = d1 * xp + d2s
            t2b = (r1 * xp + r2s) / den if den > 0.0 else 0.0
            xn = (
                xi
                + (level - rate * xp + t2b * sig2 * xp) * dt
                + sig * np.sqrt(xp * dt) * z[s, p]
            )
            k1 = counts1[s, p]
            if k1 > 0:
                o = off1[s, p]
                err[4] += k1
                for j in range(k1):
                    xb = sizes1[o + j]
                    g = np.expm1(-Bs * xb) / Bs if not Bn_small else -xb
                    c_tilt = t2b * g
                    if c_tilt >= 1.0:
                        if err[0] == 0:
                            err[2] = s
                            err[3] = idx
                        err[0] += 1
                    elif accu1[o + j] < 1.0 - c_tilt:
                        xn += xb
            if c_hat > 0.0:
                k2 = counts2[s, p]
                if k2 > 0 and t2b > 0.0:
                    o2 = off2[s, p]
                    for j in range(k2):
                        xb = sizes2[o2 + j]
                        # (1 - e^{-Bx}) / (Bx) in (0, 1], regular at maturity
                        w = -np.expm1(-Bs * xb) / (Bs * xb) if not Bn_small else 1.0
                        alpha = t2b * vs * w / c_hat
                        if alpha > 1.0 + 1e-9:
                            if err[1] == 0:
                                err[2] = s
                                err[3] = idx
                            err[1] += 1
                        elif accu2[o2 + j] < alpha:
                            xn += xb
            xnp = xn if xn > 0.0 else 0.0
            den_n = d1 * xnp + d2n
            num_n = r1 * xnp + r2n
            f_new = num_n * num_n / den_n if den_n > 0.0 else 0.0
            acc[idx] += 0.5 * dt * (f_prev[idx] + f_new)
            f_prev[idx] = f_new
            x[idx] = xn


@njit(cache=True)
def surface_row_density(
    x,
    phi,
    f_prev,
    acc,
    z,
    counts1,
    off1,
    sizes1,
    B,
    r2,
    d2,
    mean_g,
    r1,
    d1,
    dt,
    level,
    rate,
    sig,
    varrho,
    n_inner,
):
    """Physical-dynamics ensemble for one surface row, with the density factor.

    The intensity evolves as under the physical measure; phi accumulates
    the stochastic exponential of the mean-variance tilt (floored at 0)
    so the caller can weight the integral accumulator by phi or 1/phi.
    """
    n_sub = z.shape[0]
    n_tot = x.size
    sqdt = np.sqrt(dt)
    for s in range(n_sub):
        Bs = B[s]
        r2s = r2[s]
        d2s = d2[s]
        r2n = r2[s + 1]
        d2n = d2[s + 1]
        mg = mean_g[s]
        Bn_small = Bs <= 1e-12
        for idx in range(n_tot):
            p = idx % n_inner
            xi = x[idx]
            xp = xi if xi > 0.0 else 0.0
            den = d1 * xp + d2s
            t2b = (r1 * xp + r2s) / den if den > 0.0 else 0.0
            sq = np.sqrt(xp)
            xn = xi + (level - rate * xp) * dt + sig * sq * sqdt * z[s, p]
            jump_g = 0.0
            k1 = counts1[s, p]
            if k1 > 0:
                o = off1[s, p]
                for j in range(k1):
                    xb = sizes1[o + j]
                    xn += xb
                    jump_g += np.expm1(-Bs * xb) / Bs if not Bn_small else -xb
            factor = 1.0 + t2b * sig * sq * sqdt * z[s, p] - t2b * (jump_g - varrho * mg * dt)
            ph = phi[idx] * factor
            phi[idx] = ph if ph > 0.0 else 0.0
            xnp = xn if xn > 0.0 else 0.0
            den_n = d1 * xnp + d2n
            num_n = r1 * xnp + r2n
            f_new = num_n * num_n / den_n if den_n > 0.0 else 0.0
            acc[idx] += 0.5 * dt * (f_prev[idx] + f_new)
            f_prev[idx] = f_new
            x[idx] = xn
