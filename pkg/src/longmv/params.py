"""Model parameters, validation and scenario specification.

All rates are per year and time is measured in years.  The defaults on
every dataclass are the baseline calibration used throughout the test
suite; derived constants (theta_tilde, the mean-reversion rate of the
intensity under the physical measure, the excess return of the stock)
are exposed as accessors and never stored, so they cannot drift apart
from the primitive fields.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from enum import Enum
from pathlib import Path


class JumpSizeLaw(str, Enum):
    """Distribution of a single stock jump size x."""

    UNIT_CONSTANT = "unit_constant"      # x = 1, E[x] = E[x^2] = 1
    STANDARD_NORMAL = "standard_normal"  # x ~ N(0,1), E[x] = 0, E[x^2] = 1

    @property
    def mean(self) -> float:
        return 1.0 if self is JumpSizeLaw.UNIT_CONSTANT else 0.0

    @property
    def second_moment(self) -> float:
        return 1.0


class Scenario(str, Enum):
    BASELINE = "baseline"            # equilibrium strategy, T_L = T
    NO_LONGEVITY = "no_longevity"    # stock + cash only
    JUMP_BLIND = "jump_blind"        # blind strategy on the true jumpy market
    BROWNIAN_ONLY = "brownian_only"  # blind strategy on the moment-matched diffusion market
    NORMAL_JUMPS = "normal_jumps"    # N(0,1) stock jump sizes
    LONG_BOND = "long_bond"          # bond maturity T_L > insurance horizon T


@dataclass(frozen=True)
class MarketParams:
    """Stock and riskless-account parameters."""

    mu: float = 0.06          # stock drift
    sigma: float = 0.10       # diffusion volatility
    rho: float = 0.10         # jump sensitivity, relative jump = rho * x
    varrho_s: float = 3.0     # Poisson intensity of stock jumps
    r: float = 0.02           # riskless rate
    s0: float = 1.0           # initial stock price
    jump_size_law: JumpSizeLaw = JumpSizeLaw.UNIT_CONSTANT

    @property
    def mu_excess(self) -> float:
        return self.mu - self.r

    @property
    def jump_mean(self) -> float:
        return self.jump_size_law.mean

    @property
    def jump_second_moment(self) -> float:
        return self.jump_size_law.second_moment

    @property
    def total_variance_rate(self) -> float:
        """Instantaneous variance of relative stock returns, sigma^2 + rho^2 * varrho_s * E[x^2]."""
        return self.sigma**2 + self.rho**2 * self.varrho_s * self.jump_second_moment


@dataclass(frozen=True)
class MortalityParams:
    """Jump-CIR force-of-mortality parameters.

    The intensity jumps are compound Poisson with exponential sizes of
    mean ``varsigma``; only the stock's jump-size law is switchable.
    """

    beta: float = 0.4           # CIR mean-reversion speed (pricing measure)
    theta: float = 0.1          # CIR mean-reversion level (pricing measure)
    sigma_lambda: float = 0.3   # CIR volatility
    kappa: float = 0.2          # market price of Brownian mortality risk (times sqrt(lambda))
    psi2: float = -0.2          # market price of mortality jump risk, > -1
    varrho_lambda: float = 0.5  # jump intensity of the mortality index
    varsigma: float = 0.001     # mean of exponential jump sizes
    lambda0: float = 0.05       # initial intensity

    @property
    def theta_tilde(self) -> float:
        return theta_tilde(self)

    @property
    def reversion_rate(self) -> float:
        """Mean-reversion speed under the physical measure, beta + kappa * sigma_lambda."""
        return self.beta + self.kappa * self.sigma_lambda

    @property
    def q_jump_intensity(self) -> float:
        """Jump intensity under the pricing measure, (1 + psi2) * varrho_lambda."""
        return (1.0 + self.psi2) * self.varrho_lambda


@dataclass(frozen=True)
class ScenarioSpec:
    """What to run: scenario, horizons, preferences and Monte Carlo controls."""

    scenario: Scenario = Scenario.BASELINE
    T: float = 10.0        # insurance horizon
    T_L: float = 10.0      # longevity-bond maturity, >= T
    gamma: float = 2.0     # risk aversion
    p0: float = 1.0        # initial wealth
    n_paths: int = 200_000
    n_steps: int = 2_500   # dt = T / n_steps
    seed: int = 42

    @property
    def dt(self) -> float:
        return self.T / self.n_steps


@dataclass(frozen=True)
class SimSummary:
    """Terminal-wealth statistics of one scenario run."""

    mean_pt: float
    var_pt: float
    roer: float | None            # ln(mean)/T, None when mean <= 0
    ci_mean_halfwidth: float      # 95% normal-approximation half-widths
    ci_var_halfwidth: float
    n_paths_used: int


class InvalidParams(ValueError):
    """Raised by validate_params; carries the complete list of violations."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def theta_tilde(q: MortalityParams) -> float:
    """Adjusted reversion level theta + (1 + psi2) * varrho_lambda * varsigma / beta."""
    return q.theta + (1.0 + q.psi2) * q.varrho_lambda * q.varsigma / q.beta


def collect_violations(
    m: MarketParams, q: MortalityParams, s: ScenarioSpec
) -> list[str]:
    """Every violated invariant, with field name and offending value."""
    errs: list[str] = []

    def check(cond: bool, msg: str):
        if not cond:
            errs.append(msg)

    check(m.sigma > 0, f"sigma must be > 0 (got {m.sigma})")
    check(m.varrho_s >= 0, f"varrho_s must be >= 0 (got {m.varrho_s})")
    check(0.0 <= m.rho <= 1.0, f"rho must be in [0, 1] (got {m.rho})")
    check(m.s0 > 0, f"s0 must be > 0 (got {m.s0})")
    check(m.r >= 0, f"r must be >= 0 (got {m.r})")

    for name in ("beta", "theta", "sigma_lambda", "varsigma", "lambda0"):
        v = getattr(q, name)
        check(v > 0, f"{name} must be > 0 (got {v})")
    # zero is allowed so the moment-matched no-jump model validates
    check(q.varrho_lambda >= 0, f"varrho_lambda must be >= 0 (got {q.varrho_lambda})")
    check(q.psi2 > -1.0, f"psi2 must be > -1 (got {q.psi2})")

    check(s.T > 0, f"T must be > 0 (got {s.T})")
    check(s.T_L >= s.T, f"T_L must be >= T (got T_L={s.T_L}, T={s.T})")
    check(s.gamma > 0, f"gamma must be > 0 (got {s.gamma})")
    check(s.p0 > 0, f"p0 must be > 0 (got {s.p0})")
    check(s.n_paths >= 1, f"n_paths must be >= 1 (got {s.n_paths})")
    check(s.n_steps >= 1, f"n_steps must be >= 1 (got {s.n_steps})")
    return errs


def validate_params(
    m: MarketParams, q: MortalityParams, s: ScenarioSpec
) -> tuple[MarketParams, MortalityParams, ScenarioSpec]:
    """Return the bundle unchanged if all invariants hold, else raise InvalidParams."""
    errs = collect_violations(m, q, s)
    if errs:
        raise InvalidParams(errs)
    return m, q, s


# ---------------------------------------------------------------------------
# Flat key-value config files.  Keys are exactly the dataclass field names;
# anything not present keeps its default (the baseline calibration).
# ---------------------------------------------------------------------------

_MARKET_FIELDS = {f.name for f in fields(MarketParams)}
_MORTALITY_FIELDS = {f.name for f in fields(MortalityParams)}
_SCENARIO_FIELDS = {f.name for f in fields(ScenarioSpec)}
_INT_FIELDS = {"n_paths", "n_steps", "seed"}


def parse_config_text(
    text: str,
) -> tuple[MarketParams, MortalityParams, ScenarioSpec]:
    """Parse ``key = value`` lines ('#' starts a comment) into a parameter bundle."""
    m_kw: dict = {}
    q_kw: dict = {}
    s_kw: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams([f"line {lineno}: expected 'key = value', got {raw!r}"])
        key, val = (part.strip() for part in line.split("=", 1))
        if key in _MARKET_FIELDS:
            m_kw[key] = JumpSizeLaw(val) if key == "jump_size_law" else float(val)
        elif key in _MORTALITY_FIELDS:
            q_kw[key] = float(val)
        elif key in _SCENARIO_FIELDS:
            if key == "scenario":
                s_kw[key] = Scenario(val)
            elif key in _INT_FIELDS:
                s_kw[key] = int(val)
            else:
                s_kw[key] = float(val)
        else:
            raise InvalidParams([f"line {lineno}: unknown parameter {key!r}"])
    return MarketParams(**m_kw), MortalityParams(**q_kw), ScenarioSpec(**s_kw)


def load_config(path: str | Path) -> tuple[MarketParams, MortalityParams, ScenarioSpec]:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    return parse_config_text(p.read_text())


def with_overrides(spec: ScenarioSpec, **overrides) -> ScenarioSpec:
    """Scenario spec with the given fields replaced (None values are ignored)."""
    clean = {k: v for k, v in overrides.items() if v is not None}
    return replace(spec, **clean) if clean else spec
