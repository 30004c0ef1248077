"""Time-consistent mean-variance portfolios with a longevity bond.

Monte Carlo engine and numerical library for an insurer trading a
jump-diffusion stock, a riskless account and a zero-coupon longevity
bond whose survival index follows a jump-CIR intensity.  Closed-form
equilibrium allocations are evaluated against simulated dynamics, with
analytic moment, bond-pricing and martingale oracles throughout.
"""

from .params import (
    InvalidParams,
    JumpSizeLaw,
    MarketParams,
    MortalityParams,
    Scenario,
    ScenarioSpec,
    SimSummary,
    load_config,
    parse_config_text,
    theta_tilde,
    validate_params,
)
from .moments import MomentPair, lambda_moments, lambda_variance_alt, match_no_jump_params, stock_moments
from .bond import (
    CoeffTable,
    YCoeffs,
    bond_price,
    cir_A,
    jump_correction_alpha,
    riccati_B,
    riccati_residual,
    survival_factor,
    theta2,
    y_coeffs,
)
from .kernels import (
    GirsanovViolation,
    JointEngine,
    Measure,
    PathGrid,
    sample_jcir_terminal,
    simulate_jcir_path,
    simulate_joint_path,
    simulate_stock_path,
)
from .bsurface import (
    BSurface,
    Estimator,
    SurfaceGrid,
    build_b_surface,
    compare_estimators,
    eval_b,
    load_or_build,
    theta1,
)
from .strategy import (
    Allocation,
    ScenarioArtifacts,
    ansatz_discount,
    equilibrium_perturbation_check,
    prepare_scenario,
    scenario_strategy,
    u_star_longevity,
    u_star_stock,
)
from .portfolio import (
    AnsatzReport,
    RunResult,
    ValueReport,
    ansatz_consistency_check,
    simulate_terminal_wealth,
    step_wealth,
    summarize_terminal,
    value_function_report,
)

__version__ = "0.1.0"
