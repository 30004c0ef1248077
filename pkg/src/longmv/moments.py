"""Closed-form moments of the mortality intensity and the stock.

The intensity moments use the physical-measure mean-reversion rate
a = beta + kappa * sigma_lambda.  Both moment functions are exact for
the continuous-time dynamics and serve as oracles for the Monte Carlo
kernels.  ``match_no_jump_params`` builds the moment-matched pure
diffusion model used by the jump-blind and Brownian-only scenarios.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .params import MarketParams, MortalityParams


@dataclass(frozen=True)
class MomentPair:
    mean: float
    variance: float


def lambda_moments(q: MortalityParams, t: float) -> MomentPair:
    """Exact mean and variance of the intensity at time t under the physical measure.

    Derived from the characteristic function of the jump-CIR process; the
    variance groups into five nonnegative-summing terms.  Raises if the
    evaluated variance ever comes out negative (transcription guard).
    """
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    a = q.reversion_rate
    b = q.beta * q.theta / a
    e1 = np.exp(-a * t)
    e2 = np.exp(-2.0 * a * t)
    sig2 = q.sigma_lambda**2
    rl, vs, l0 = q.varrho_lambda, q.varsigma, q.lambda0

    mean = b * (1.0 - e1) + l0 * e1 + rl * vs / a * (1.0 - e1)
    var = (
        b * sig2 / (2.0 * a) * (1.0 - e1) ** 2
        + l0 * sig2 / a * e1 * (1.0 - e1)
        + rl * vs**2 / a * (1.0 - e2)
        + sig2 * rl * vs / a**2 * (1.0 - e1)
        + sig2 * rl * vs / (2.0 * a**2) * (e2 - 1.0)
    )
    if var < -1e-15:
        raise ArithmeticError(
            f"intensity variance formula evaluated negative ({var}) at t={t}, params={q}"
        )
    return MomentPair(float(mean), float(max(var, 0.0)))


def lambda_variance_alt(q: MortalityParams, t: float) -> float:
    """Alternate five-term variance with the damping factors entering linearly.

    Differs from ``lambda_moments`` in two terms: the reversion-level term
    carries (1 - e^{-at}) unsquared, and one jump term is divided by a
    instead of a^2.  Kept so reports can show which evaluation the Monte
    Carlo estimate supports.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    a = q.reversion_rate
    e1 = np.exp(-a * t)
    e2 = np.exp(-2.0 * a * t)
    sig2 = q.sigma_lambda**2
    rl, vs = q.varrho_lambda, q.varsigma
    return float(
        q.beta * q.theta * sig2 / (2.0 * a**2) * (1.0 - e1)
        + q.lambda0 * sig2 / a * e1 * (1.0 - e1)
        + rl * vs**2 / a * (1.0 - e2)
        + sig2 * rl * vs / a * (1.0 - e1)
        + sig2 * rl * vs / (2.0 * a**2) * (e2 - 1.0)
    )


def stock_moments(m: MarketParams, t: float) -> MomentPair:
    """Exact mean and variance of the stock price at time t."""
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    mean = m.s0 * np.exp(m.mu * t)
    second = m.s0**2 * np.exp((2.0 * m.mu + m.total_variance_rate) * t)
    return MomentPair(float(mean), float(max(second - mean**2, 0.0)))


def match_no_jump_params(
    m: MarketParams,
    q: MortalityParams,
    t_match: float,
    *,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> tuple[MarketParams, MortalityParams]:
    """Pure-diffusion parameters whose terminal moments match the jump model.

    Stock: sigma'^2 = sigma^2 + rho^2 * varrho_s * E[x^2] with the jump
    intensity set to zero, which matches both stock moments at every
    horizon.  Mortality: the jump intensity is set to zero and
    (theta', sigma_lambda') are solved by a damped Newton iteration so
    that the diffusion-only moments at ``t_match`` equal the jump-model
    moments there, holding beta, kappa and lambda0 fixed.
    """
    if t_match <= 0:
        raise ValueError(f"t_match must be > 0 (got {t_match})")

    m2 = replace(m, sigma=float(np.sqrt(m.total_variance_rate)), varrho_s=0.0)

    target = lambda_moments(q, t_match)

    def residual(v: np.ndarray) -> np.ndarray:
        trial = replace(q, theta=float(v[0]), sigma_lambda=float(v[1]), varrho_lambda=0.0)
        got = lambda_moments(trial, t_match)
        return np.array([got.mean - target.mean, got.variance - target.variance])

    v = np.array([q.theta, q.sigma_lambda])
    f = residual(v)
    for _ in range(max_iter):
        if np.max(np.abs(f)) <= tol:
            break
        jac = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * max(1.0, abs(v[j]))
            vp, vm = v.copy(), v.copy()
            vp[j] += h
            vm[j] -= h
            jac[:, j] = (residual(vp) - residual(vm)) / (2.0 * h)
        step = np.linalg.solve(jac, -f)
        damp = 1.0
        while damp > 1e-8:
            v_new = v + damp * step
            if v_new[0] > 0 and v_new[1] > 0:
                f_new = residual(v_new)
                if np.max(np.abs(f_new)) < np.max(np.abs(f)):
                    v, f = v_new, f_new
                    break
            damp *= 0.5
        else:
            break
    if np.max(np.abs(f)) > tol:
        raise ArithmeticError(
            "moment matching did not converge: "
            f"residuals mean={f[0]:.3e}, var={f[1]:.3e} at theta'={v[0]}, sigma_lambda'={v[1]}"
        )
    q2 = replace(q, theta=float(v[0]), sigma_lambda=float(v[1]), varrho_lambda=0.0)
    return m2, q2
