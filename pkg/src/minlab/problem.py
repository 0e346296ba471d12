"""Model parameters, regime classification and the scalar ratio function.

The energy under study is

    E(u) = int (alpha + |x|^beta |u|^k) |grad u|^2 - lam * int u^2

minimized over the unit sphere of L^q with q = 2n/(n-2).  This module
holds the parameter bookkeeping (derived exponents, admissibility flags),
the classification of the (beta, k) plane into scaling regimes, and two
scalar functions used by the optimality analysis: the ratio g(t) whose
infimum over (0,1) is q/2, and the norm-restriction root T for
supercritical spectral parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

#: tolerance for regime boundary comparisons on beta - k*n/q
BOUNDARY_TOL = 1e-12


class UnsupportedDimensionError(ValueError):
    """Raised for dimensions n < 4, where the analysis does not apply."""


@dataclass(frozen=True)
class ProblemParams:
    """Validated model parameters with derived critical exponents.

    Attributes
    ----------
    n : ambient dimension, n >= 4.
    alpha : floor of the weight, alpha > 0.
    beta : vanishing order of the spatial weight at the origin, beta >= 0.
    k : amplitude exponent of the nonlinear weight, 0 <= k < q.
    lam : spectral parameter (units of an eigenvalue).
    q : critical Sobolev exponent 2n/(n-2).
    beta_lin : k*n/q, the regime boundary between nonlinear and linear
        dominance.
    beta_star : k*n/q + 2, the existence threshold.
    k_admissible : whether k <= q - 2, required by the existence theory.
    """

    n: int
    alpha: float
    beta: float
    k: float
    lam: float
    q: float
    beta_lin: float
    beta_star: float
    k_admissible: bool


def derive(n: int, alpha: float, beta: float, k: float, lam: float) -> ProblemParams:
    """Validate raw inputs and compute the derived exponents.

    Raises
    ------
    UnsupportedDimensionError
        if n < 4.
    ValueError
        for alpha <= 0, beta < 0, k < 0, k >= q, or non-finite lam.
    """
    n = int(n)
    if n < 4:
        raise UnsupportedDimensionError(f"unsupported dimension n={n}: need n >= 4")
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if not np.isfinite(lam):
        raise ValueError("lambda must be finite")
    q = 2.0 * n / (n - 2)
    if k >= q:
        raise ValueError(f"k={k} outside the model range [0, q) with q={q}")
    beta_lin = k * n / q
    return ProblemParams(
        n=n,
        alpha=float(alpha),
        beta=float(beta),
        k=float(k),
        lam=float(lam),
        q=q,
        beta_lin=beta_lin,
        beta_star=beta_lin + 2.0,
        k_admissible=(k <= q - 2.0 + BOUNDARY_TOL),
    )


class RegimeTag(Enum):
    NONLINEAR_DOMINANT = "NonlinearDominant"
    BALANCED = "Balanced"
    LINEAR_WINDOW = "LinearWindow"
    EXISTENCE_RANGE = "ExistenceRange"


@dataclass(frozen=True)
class Regime:
    """Scaling regime of (beta, k) with the witness quantities.

    ``gap`` is beta - k*n/q; the tag is determined by comparing it to 0
    and to 2 (strict below 0, equality at 0, and strict above 2 for the
    existence range).
    """

    tag: RegimeTag
    gap: float
    beta: float
    beta_lin: float
    beta_star: float


def _exact_gap(params: ProblemParams) -> Optional[Fraction]:
    """beta*q - k*n as an exact rational when the inputs are exactly
    representable, else None."""
    try:
        b = Fraction(params.beta)
        k = Fraction(params.k)
        q = Fraction(2 * params.n, params.n - 2)
        return b - k * Fraction(params.n) / q
    except (ValueError, OverflowError):
        return None


def classify(params: ProblemParams) -> Regime:
    """Assign the unique scaling regime of the parameter set.

    Comparisons on beta - k*n/q use exact rational arithmetic when the
    inputs are exactly representable floats, with a 1e-12 tolerance
    fallback for the equality case.
    """
    gap_f = params.beta - params.beta_lin
    gap = _exact_gap(params)
    if gap is not None:
        if gap < 0:
            tag = RegimeTag.NONLINEAR_DOMINANT
        elif gap == 0:
            tag = RegimeTag.BALANCED
        elif gap <= 2:
            tag = RegimeTag.LINEAR_WINDOW
        else:
            tag = RegimeTag.EXISTENCE_RANGE
    else:
        if gap_f < -BOUNDARY_TOL:
            tag = RegimeTag.NONLINEAR_DOMINANT
        elif abs(gap_f) <= BOUNDARY_TOL:
            tag = RegimeTag.BALANCED
        elif gap_f <= 2.0 + BOUNDARY_TOL:
            tag = RegimeTag.LINEAR_WINDOW
        else:
            tag = RegimeTag.EXISTENCE_RANGE
    return Regime(
        tag=tag,
        gap=gap_f,
        beta=params.beta,
        beta_lin=params.beta_lin,
        beta_star=params.beta_star,
    )


@dataclass(frozen=True)
class GeneralWeights:
    """Radial weight pair (b1, b2) for the generalized energy.

    b1 must satisfy b1(r) >= alpha with b1(0) = alpha (minimum of order
    gamma > 2 for existence experiments); b2 must vanish at the origin
    and be positive elsewhere.
    """

    b1: Callable[[np.ndarray], np.ndarray]
    b2: Callable[[np.ndarray], np.ndarray]
    gamma: float

    def validate(self, alpha: float, r_probe: np.ndarray) -> None:
        """Spot-check the floor/zero structure on a set of probe radii."""
        b1v = np.asarray(self.b1(r_probe), dtype=float)
        b2v = np.asarray(self.b2(r_probe), dtype=float)
        if np.any(b1v < alpha - 1e-12):
            raise ValueError("b1 drops below the declared floor alpha")
        if np.any(b2v[r_probe > 0] <= 0):
            raise ValueError("b2 must be positive away from the origin")


def _one_minus_pow(x: float, a: float) -> float:
    """1 - (1 - x)^a, stabilized against cancellation for small x.

    Written as -expm1(a * log1p(-x)), which is accurate to machine
    precision uniformly in x (the naive form loses half the digits when
    x is tiny) and keeps branch-free monotonicity in x.
    """
    return -np.expm1(a * np.log1p(-x))


def g_ratio(t: float, q: float) -> float:
    """The ratio (1-t^q)^(2/q-1) * t^q / (1 - (1-t^q)^(2/q)).

    Strictly increasing on (0,1) with infimum q/2 at t -> 0+ and
    divergence at t -> 1-.  Raises ValueError outside (0,1).
    """
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0,1), got {t}")
    if q <= 2.0:
        raise ValueError(f"q must exceed 2, got {q}")
    x = t**q
    denom = _one_minus_pow(x, 2.0 / q)
    return np.exp((2.0 / q - 1.0) * np.log1p(-x)) * x / denom


def g_aux(t: float, q: float) -> float:
    """q*(1 - (1-t^q)^(2/q)) - 2*t^q, the sign factor of g_ratio's
    derivative; nonnegative on (0,1)."""
    if not 0.0 < t < 1.0:
        raise ValueError(f"t must lie in (0,1), got {t}")
    x = t**q
    return q * _one_minus_pow(x, 2.0 / q) - 2.0 * x


def lambda_window_bound(
    params: ProblemParams,
    s_lambda_est: float,
    lambda1: float,
    domain_volume: float,
) -> Optional[float]:
    """Norm-restriction threshold T for lam above the eigenvalue ceiling.

    Solves ((q-2)/k - 1) * S / (|Omega|^(1-2/q) * (lam - alpha*lambda1))
    = T^2 / (1 - (1-T^q)^(2/q)) for T in (0,1).  The right-hand side is a
    decreasing bijection onto (1, inf), so a root exists iff the left
    side exceeds 1; returns None otherwise (no restriction).
    """
    if params.k <= 0:
        raise ValueError("the bound requires k > 0")
    if s_lambda_est <= 0:
        raise ValueError("the bound requires a positive infimum estimate")
    if params.lam <= params.alpha * lambda1:
        raise ValueError(
            "bound only applies for lambda > alpha*lambda1 "
            f"(lambda={params.lam}, alpha*lambda1={params.alpha * lambda1})"
        )
    q = params.q
    lhs = ((q - 2.0) / params.k - 1.0) * s_lambda_est / (
        domain_volume ** (1.0 - 2.0 / q) * (params.lam - params.alpha * lambda1)
    )
    if lhs <= 1.0:
        return None

    def rhs(t: float) -> float:
        return t * t / _one_minus_pow(t**q, 2.0 / q)

    # rhs decreases from +inf at 0+ to 1 at t=1; bisect rhs(T) - lhs.
    lo, hi = 1e-300, 1.0
    # shrink lo upward until rhs(lo) is finite and above lhs
    lo = 1e-12
    while rhs(lo) < lhs:
        lo /= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rhs(mid) > lhs:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)
