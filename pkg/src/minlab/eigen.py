"""First Dirichlet eigenvalue of -Laplace on the ball, radial reduction.

The eigenpair is computed by inverse power iteration on the discrete
pencil (K, M), where K is the stiffness matrix of the midpoint-gradient
Dirichlet form (the same form the energy module uses, with unit weight)
and M the lumped radial mass matrix.  The discrete lambda1 is therefore
exactly the minimum of the discrete Rayleigh quotient, so coercivity
statements made with this eigenvalue hold to machine precision in the
discrete model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .field import RadialField, energy
from .grid import RadialGrid
from .problem import ProblemParams


class ConvergenceError(RuntimeError):
    """Inverse iteration failed to settle within the iteration budget."""


@dataclass(frozen=True)
class EigenResult:
    """First Dirichlet eigenpair on the grid's ball.

    phi is normalized to ||phi||_2 = 1 and sign-fixed positive in the
    interior; residual is the discrete L^2 norm of -Lap(phi) - lambda1*phi.
    """

    lambda1: float
    phi: RadialField
    iterations: int
    residual: float


def stiffness_banded(grid: RadialGrid) -> np.ndarray:
    """Dirichlet stiffness of int |grad u|^2 in lower-banded (2 x N) form.

    Degrees of freedom are nodes 0..m-1 (node m is eliminated by the
    boundary condition).  Row 0 holds the diagonal, row 1 the
    subdiagonal.
    """
    m = grid.m
    c = grid.cell_volumes / grid.cell_widths**2
    ab = np.zeros((2, m))
    ab[0, :] = c[:m]
    ab[0, 1:] += c[: m - 1]
    ab[1, : m - 1] = -c[: m - 1]
    return ab


def rayleigh_quotient(grid: RadialGrid, v: np.ndarray) -> float:
    """int |grad v|^2 / int v^2 in the discrete forms (v has m+1 values,
    v[m] = 0 enforced)."""
    v = np.asarray(v, dtype=float)
    g = np.diff(v) / grid.cell_widths
    num = float(np.dot(g * g, grid.cell_volumes))
    den = float(np.dot(grid.weights, v * v))
    if den == 0.0:
        raise ValueError("Rayleigh quotient undefined on the zero field")
    return num / den


def lambda1(grid: RadialGrid, tol: float = 1e-12, max_iter: int = 10_000) -> EigenResult:
    """First Dirichlet eigenpair by shift-0 inverse power iteration."""
    m = grid.m
    K = stiffness_banded(grid)
    w = grid.weights[:m]
    cho = cholesky_banded(K, lower=True)

    rng = np.random.default_rng(12345)
    x = np.abs(rng.standard_normal(m)) + 1.0
    lam_old = np.inf
    lam = np.inf
    for it in range(1, max_iter + 1):
        x = cho_solve_banded((cho, True), w * x)
        # Rayleigh quotient of the iterate
        num = _apply_banded(K, x) @ x
        den = float(np.dot(w, x * x))
        lam = num / den
        x /= np.sqrt(den)
        if np.isfinite(lam_old) and abs(lam - lam_old) <= tol * abs(lam):
            break
        lam_old = lam
    else:
        raise ConvergenceError(f"inverse iteration did not converge in {max_iter} steps")

    if np.sum(x * w) < 0:
        x = -x
    vals = np.zeros(m + 1)
    vals[:m] = x
    res_vec = _apply_banded(K, x) - lam * w * x
    residual = float(np.sqrt(np.sum(res_vec**2 / w)))
    phi = RadialField(grid, vals)
    return EigenResult(lambda1=float(lam), phi=phi, iterations=it, residual=residual)


def _apply_banded(ab: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Symmetric tridiagonal matvec from the lower-banded storage."""
    y = ab[0] * x
    y[:-1] += ab[1, :-1] * x[1:]
    y[1:] += ab[1, :-1] * x[:-1]
    return y


def lambda1_weighted_limit_check(
    params: ProblemParams,
    grid: RadialGrid,
    N_ladder: Sequence[float],
) -> List[Tuple[float, float]]:
    """Weighted Rayleigh quotient of phi/N along the amplitude ladder.

    Returns (N, quotient) rows with quotient =
    [int (alpha + r^beta |phi/N|^k) |grad(phi/N)|^2] / int (phi/N)^2,
    a decreasing sequence converging to alpha * lambda1 with gap
    proportional to N^(-k).
    """
    if params.k <= 0:
        raise ValueError("the amplitude ladder requires k > 0")
    eig = lambda1(grid)
    rows = []
    for N in N_ladder:
        u = RadialField(grid, eig.phi.values / N)
        e = energy(params, u)
        rows.append((float(N), (e.grad2 + e.nonlinear) / e.mass))
    return rows
