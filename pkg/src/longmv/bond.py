"""Affine pricing of the zero-coupon longevity bond and dollar-value coefficients.

Under the pricing measure the intensity is a jump-CIR process, so the
survival factor E_Q[exp(-int lambda)] keeps the standard CIR closed
forms for the A/B coefficients with a multiplicative jump correction
alpha obtained from the exponential-size Laplace transform.  The bond's
dollar-value process enters the portfolio through the coefficient
functions nu_L (excess return), sigma_L (diffusion loading) and
eta_L (relative jump).  All of them vanish at the bond maturity; the
``CoeffTable`` pre-tabulates the maturity-factored pieces on a time
grid so downstream code stays regular as B -> 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .params import MortalityParams


def _tau(t, t_mat):
    tau = np.asarray(t_mat - t, dtype=float)
    if np.any(tau < -1e-12):
        raise ValueError(f"t must be <= maturity {t_mat} (got t={t})")
    return np.maximum(tau, 0.0)


def riccati_B(t, T_L: float, q: MortalityParams):
    """CIR coefficient B(t, T_L); accepts scalars or arrays in t."""
    tau = _tau(t, T_L)
    h = np.sqrt(q.beta**2 + 2.0 * q.sigma_lambda**2)
    em1 = np.expm1(h * tau)
    out = 2.0 * em1 / (2.0 * h + (q.beta + h) * em1)
    return float(out) if np.ndim(t) == 0 else out


def riccati_residual(t, T_L: float, q: MortalityParams):
    """Residual of d/dt B - (sigma^2/2 B^2 + beta B - 1); zero for the closed form."""
    tau = _tau(t, T_L)
    h = np.sqrt(q.beta**2 + 2.0 * q.sigma_lambda**2)
    em1 = np.expm1(h * tau)
    denom = 2.0 * h + (q.beta + h) * em1
    dB_dtau = 4.0 * h**2 * np.exp(h * tau) / denom**2
    B = 2.0 * em1 / denom
    res = -dB_dtau - (0.5 * q.sigma_lambda**2 * B**2 + q.beta * B - 1.0)
    return float(res) if np.ndim(t) == 0 else res


def cir_A(t, T_L: float, q: MortalityParams):
    """CIR coefficient A(t, T_L); equals 1 at maturity and for theta = 0."""
    tau = _tau(t, T_L)
    h = np.sqrt(q.beta**2 + 2.0 * q.sigma_lambda**2)
    em1 = np.expm1(h * tau)
    base = 2.0 * h * np.exp((q.beta + h) * tau / 2.0) / (2.0 * h + (q.beta + h) * em1)
    out = base ** (2.0 * q.beta * q.theta / q.sigma_lambda**2)
    return float(out) if np.ndim(t) == 0 else out


def jump_correction_alpha(t: float, T_L: float, q: MortalityParams, *, rtol: float = 1e-8) -> float:
    """Jump factor alpha(t, T_L) of the survival transform.

    exp(-(1+psi2) * varrho_lambda * int_t^{T_L} vs*B/(1+vs*B) ds), using the
    closed-form Laplace transform of exponential jump sizes inside the
    integrand and adaptive quadrature for the time integral.
    """
    _tau(t, T_L)
    if q.varrho_lambda == 0.0 or t == T_L:
        return 1.0

    def integrand(s: float) -> float:
        u = q.varsigma * riccati_B(s, T_L, q)
        return u / (1.0 + u)

    val, _ = quad(integrand, t, T_L, epsrel=rtol, epsabs=0.0, limit=200)
    return float(np.exp(-q.q_jump_intensity * val))


def survival_factor(t: float, T_L: float, lam: float, q: MortalityParams) -> float:
    """E_Q[exp(-int_t^{T_L} lambda)] = A * alpha * exp(-B * lambda)."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0 (got {lam})")
    return float(
        cir_A(t, T_L, q)
        * jump_correction_alpha(t, T_L, q)
        * np.exp(-riccati_B(t, T_L, q) * lam)
    )


def bond_price(t: float, T_L: float, lam: float, q: MortalityParams, r: float) -> float:
    """Longevity bond price exp(-r(T_L - t)) * A * alpha * exp(-B * lambda), in (0, 1]."""
    tau = _tau(t, T_L)
    return float(np.exp(-r * tau) * survival_factor(t, T_L, lam, q))


# ---------------------------------------------------------------------------
# Dollar-value process coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class YCoeffs:
    """Coefficients of the dollar-value process at one (t, lambda) point."""

    nu_l: float        # excess return
    sigma_l: float     # Brownian loading (<= 0)
    eta_tilde: float   # second moment of the relative jump under the jump measure
    B: float           # maturity coefficient driving all of the above

    def eta_l(self, xbar):
        """Relative jump of the bond value for an intensity jump of size xbar."""
        return np.expm1(-self.B * np.asarray(xbar, dtype=float))


def eta_tilde_closed(B, q: MortalityParams):
    """varrho * E[(e^{-B x} - 1)^2] for exponential sizes: 2*varrho*u^2/((1+u)(1+2u))."""
    u = q.varsigma * np.asarray(B, dtype=float)
    out = 2.0 * q.varrho_lambda * u**2 / ((1.0 + u) * (1.0 + 2.0 * u))
    return float(out) if np.isscalar(B) else out


def eta_tilde_quad(B: float, q: MortalityParams) -> float:
    """Quadrature evaluation of the same integral (oracle for the closed form)."""
    vs = q.varsigma

    def integrand(x: float) -> float:
        return (np.expm1(-B * x)) ** 2 * np.exp(-x / vs) / vs

    val, _ = quad(integrand, 0.0, np.inf, epsrel=1e-12, epsabs=1e-16, limit=200)
    return q.varrho_lambda * float(val)


def y_coeffs(t: float, lam: float, T_L: float, q: MortalityParams) -> YCoeffs:
    """nu_L, sigma_L, eta_tilde at (t, lambda) for a bond of maturity T_L."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0 (got {lam})")
    B = riccati_B(t, T_L, q)
    u = q.varsigma * B
    # E[e^{-Bx} - 1] = 1/(1+u) - 1 = -u/(1+u)
    mean_eta = -u / (1.0 + u)
    nu = B * q.sigma_lambda * q.kappa * lam - q.psi2 * q.varrho_lambda * mean_eta
    sig = -B * q.sigma_lambda * np.sqrt(lam)
    return YCoeffs(nu_l=float(nu), sigma_l=float(sig), eta_tilde=eta_tilde_closed(B, q), B=float(B))


@dataclass(frozen=True)
class CoeffTable:
    """Maturity-factored bond coefficients tabulated on a time grid.

    With u = varsigma * B(t, T_L):

        nu_L(t, lam)          = B * (r1 * lam + r2)
        sigma_L(t, lam)^2     = B^2 * d1 * lam
        eta_tilde(t)          = B^2 * d2
        theta2(t, lam) * B    = (r1*lam + r2) / (d1*lam + d2)

    so the mean-variance ratio theta2 and every product the simulator
    needs stay numerically regular as B -> 0 at maturity.
    """

    times: np.ndarray      # grid where the rows live
    B: np.ndarray
    r1: float              # sigma_lambda * kappa
    r2: np.ndarray         # psi2 * varrho * varsigma / (1+u)
    d1: float              # sigma_lambda^2
    d2: np.ndarray         # 2 * varrho * varsigma^2 / ((1+u)(1+2u))
    mean_eta: np.ndarray   # E[eta_L] = -u/(1+u)
    eta_tilde: np.ndarray  # B^2 * d2

    @classmethod
    def build(cls, times: np.ndarray, T_L: float, q: MortalityParams) -> "CoeffTable":
        times = np.asarray(times, dtype=float)
        B = riccati_B(times, T_L, q)
        u = q.varsigma * B
        r2 = q.psi2 * q.varrho_lambda * q.varsigma / (1.0 + u)
        d2 = 2.0 * q.varrho_lambda * q.varsigma**2 / ((1.0 + u) * (1.0 + 2.0 * u))
        return cls(
            times=times,
            B=B,
            r1=q.sigma_lambda * q.kappa,
            r2=r2,
            d1=q.sigma_lambda**2,
            d2=d2,
            mean_eta=-u / (1.0 + u),
            eta_tilde=B**2 * d2,
        )

    def nu_l(self, i: int, lam) -> np.ndarray:
        return self.B[i] * (self.r1 * lam + self.r2[i])

    def theta2_times_b(self, i: int, lam) -> np.ndarray:
        """theta2 * B, regular at maturity; divide by B[i] only when B > 0."""
        den = self.d1 * lam + self.d2[i]
        num = self.r1 * lam + self.r2[i]
        # den == 0 only for the no-jump model at lam == 0 where nu_L == 0 too
        return np.divide(num, den, out=np.zeros_like(num * den), where=den > 0)

    def integrand_theta2_nu(self, i: int, lam) -> np.ndarray:
        """theta2 * nu_L = (r1*lam + r2)^2 / (d1*lam + d2), regular at maturity."""
        n = self.r1 * lam + self.r2[i]
        den = self.d1 * lam + self.d2[i]
        return np.divide(n * n, den, out=np.zeros_like(n * den), where=den > 0)


def theta2(t: float, lam: float, T_L: float, q: MortalityParams) -> float:
    """Mean-variance ratio of the bond, nu_L / (sigma_L^2 + eta_tilde).

    Diverges like 1/B as t -> T_L (numerator O(B), denominator O(B^2)),
    so evaluation at the maturity itself is rejected.
    """
    if t >= T_L:
        raise ValueError(f"theta2 requires t < T_L (got t={t}, T_L={T_L})")
    if lam < 0:
        raise ValueError(f"lambda must be >= 0 (got {lam})")
    B = riccati_B(t, T_L, q)
    u = q.varsigma * B
    r2 = q.psi2 * q.varrho_lambda * q.varsigma / (1.0 + u)
    d2 = 2.0 * q.varrho_lambda * q.varsigma**2 / ((1.0 + u) * (1.0 + 2.0 * u))
    r1 = q.sigma_lambda * q.kappa
    d1 = q.sigma_lambda**2
    return float((r1 * lam + r2) / (B * (d1 * lam + d2)))
