"""minlab: numerical laboratory for weighted critical-exponent minimization.

Implements, minimizes and cross-validates the constrained energy

    E(u) = int (alpha + |x|^beta |u|^k) |grad u|^2 - lam * int u^2

over the unit L^q sphere (q = 2n/(n-2)) on balls in dimension n >= 4:
concentration-profile asymptotics, eigenvalue thresholds, projected
descent with optimality certification, and regime sweeps.
"""

from .bubble import (
    BubbleConstants,
    BubbleSpec,
    ScalingFit,
    ScanTable,
    estimate_constants,
    fit_scaling,
    omega_eps,
    scan,
    upper_bound_experiment,
)
from .eigen import EigenResult, lambda1, lambda1_weighted_limit_check
from .estimator import ConstrainedEnergyMinimizer
from .field import (
    EnergyBreakdown,
    RadialField,
    el_gradient,
    el_residual,
    energy,
    load_field,
    lq_norm,
    normalize_lq,
    pohozaev_residual,
    save_field,
    theta_multiplier,
)
from .grid import RadialGrid, differentiate, integrate, make_grid
from .minimize import (
    MinimizeReport,
    SolverOptions,
    concentration_diagnostics,
    contradiction_audit,
    minimize,
    phase_sweep,
    s_lambda_estimate,
)
from .problem import (
    GeneralWeights,
    ProblemParams,
    Regime,
    RegimeTag,
    UnsupportedDimensionError,
    classify,
    derive,
    g_aux,
    g_ratio,
    lambda_window_bound,
)

__version__ = "0.1.0"

__all__ = [
    "BubbleConstants",
    "BubbleSpec",
    "ConstrainedEnergyMinimizer",
    "EigenResult",
    "EnergyBreakdown",
    "GeneralWeights",
    "MinimizeReport",
    "ProblemParams",
    "RadialField",
    "RadialGrid",
    "Regime",
    "RegimeTag",
    "ScalingFit",
    "ScanTable",
    "SolverOptions",
    "UnsupportedDimensionError",
    "classify",
    "concentration_diagnostics",
    "contradiction_audit",
    "derive",
    "differentiate",
    "el_gradient",
    "el_residual",
    "energy",
    "estimate_constants",
    "fit_scaling",
    "g_aux",
    "g_ratio",
    "integrate",
    "lambda1",
    "lambda1_weighted_limit_check",
    "lambda_window_bound",
    "load_field",
    "lq_norm",
    "make_grid",
    "minimize",
    "normalize_lq",
    "omega_eps",
    "phase_sweep",
    "pohozaev_residual",
    "s_lambda_estimate",
    "save_field",
    "scan",
    "theta_multiplier",
    "upper_bound_experiment",
]
