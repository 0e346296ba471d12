"""Radial fields, norms, the energy functional and optimality residuals.

The discrete energy uses midpoint (per-cell) gradients,

    E(u) = sum_c a(r_c, u_c) * ((u_{i+1}-u_i)/h_c)^2 * V_c
           - lam * sum_i w_i u_i^2,

with a(r, s) = b1(r) + b2(r)|s|^k evaluated at cell midpoints.  This
form is coercive (its Rayleigh quotient is minimized exactly by the
discrete eigenvalue solver), and the discrete gradient below is its
exact derivative, which guarantees descent directions for the
constrained optimizer on any mesh grading.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .grid import RadialGrid, cell_gradients, grid_from_nodes, h1_seminorm_sq, integrate
from .problem import GeneralWeights, ProblemParams


class RegularizationRequiredError(ValueError):
    """|u|^(k-2) is singular for 0 < k < 2 at a zero of u and no
    regularization width was supplied."""


class ZeroFieldError(ValueError):
    """Operation undefined on the zero field."""


@dataclass(frozen=True)
class RadialField:
    """Nodal values of a radial function with u(R) = 0."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.m + 1,):
            raise ValueError(
                f"expected {self.grid.m + 1} nodal values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if v[-1] != 0.0:
            raise ValueError("Dirichlet condition violated: u(R) must be 0")
        object.__setattr__(self, "values", v)

    def __mul__(self, c: float) -> "RadialField":
        return RadialField(self.grid, self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class EnergyBreakdown:
    """The three energy integrals and their total.

    grad2 = int b1 |grad u|^2 (b1 = alpha in the reduced model),
    nonlinear = int b2 |u|^k |grad u|^2 (b2 = r^beta), mass = int u^2,
    total = grad2 + nonlinear - lam * mass.
    """

    grad2: float
    nonlinear: float
    mass: float
    total: float


class PohozaevCheck(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def lq_norm(u: RadialField, p: float) -> float:
    """L^p norm of the field over the ball."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return integrate(u.grid, np.abs(u.values) ** p) ** (1.0 / p)


def normalize_lq(u: RadialField, q: float) -> RadialField:
    """u / ||u||_q; raises ZeroFieldError on the zero field."""
    nrm = lq_norm(u, q)
    if nrm == 0.0:
        raise ZeroFieldError("cannot normalize the zero field")
    return RadialField(u.grid, u.values / nrm)


def _cell_coefficients(
    params: ProblemParams,
    grid: RadialGrid,
    weights: Optional[GeneralWeights],
) -> Tuple[np.ndarray, np.ndarray]:
    """(b1, b2) evaluated at cell midpoints.

    The reduced model uses b1 = alpha, b2 = r^beta.  The degenerate
    corner beta = k = 0 collapses to the classical constant-coefficient
    problem: the spatial weight has no zero there, so b2 is taken
    identically 0 and the energy reduces to alpha * int |grad u|^2.
    """
    rc = grid.cell_midpoints
    if weights is not None:
        return (
            np.asarray(weights.b1(rc), dtype=float),
            np.asarray(weights.b2(rc), dtype=float),
        )
    b1 = np.full(grid.m, params.alpha)
    if params.beta == 0.0 and params.k == 0.0:
        b2 = np.zeros(grid.m)
    else:
        b2 = rc**params.beta
    return b1, b2


def _abs_pow(x: np.ndarray, k: float) -> np.ndarray:
    """|x|^k, with |x|^0 = 1."""
    if k == 0.0:
        return np.ones_like(x)
    return np.abs(x) ** k


def energy(
    params: ProblemParams,
    u: RadialField,
    weights: Optional[GeneralWeights] = None,
) -> EnergyBreakdown:
    """Energy breakdown of the field under the given parameters."""
    grid = u.grid
    g = cell_gradients(grid, u.values)
    um = 0.5 * (u.values[:-1] + u.values[1:])
    b1, b2 = _cell_coefficients(params, grid, weights)
    g2V = g * g * grid.cell_volumes
    grad2 = float(np.dot(b1, g2V))
    nonlinear = float(np.dot(b2 * _abs_pow(um, params.k), g2V))
    mass = float(np.dot(grid.weights, u.values**2))
    if not (np.isfinite(grad2) and np.isfinite(nonlinear) and np.isfinite(mass)):
        raise FloatingPointError("non-finite energy integrand")
    return EnergyBreakdown(
        grad2=grad2,
        nonlinear=nonlinear,
        mass=mass,
        total=grad2 + nonlinear - params.lam * mass,
    )


def _signed_pow_km1(um: np.ndarray, k: float, delta: float) -> np.ndarray:
    """u * |u|^(k-2) at cell midpoints, regularized for 0 < k < 2.

    Uses u * (u^2 + delta^2)^((k-2)/2); for k >= 2 the exact a.e. value
    is returned (0 at zeros of u).
    """
    if k >= 2.0:
        out = np.zeros_like(um)
        nz = um != 0.0
        out[nz] = um[nz] * np.abs(um[nz]) ** (k - 2.0)
        if k == 2.0:
            out = um.copy()
        return out
    if delta <= 0.0:
        if np.any(um == 0.0):
            raise RegularizationRequiredError(
                "|u|^(k-2) singular at a zero of u: set delta_reg > 0"
            )
        return um * np.abs(um) ** (k - 2.0)
    return um * (um * um + delta * delta) ** ((k - 2.0) / 2.0)


def energy_gradient_raw(
    params: ProblemParams,
    u: RadialField,
    weights: Optional[GeneralWeights] = None,
    delta_reg: Optional[float] = None,
) -> np.ndarray:
    """Euclidean gradient dE/du_j of the discrete energy.

    The L^2 gradient G of the energy satisfies <G, phi>_{L^2} =
    dE(u)[phi], i.e. G_j = (dE/du_j) / w_j; this helper returns the raw
    dE/du_j vector, which is what optimizers and linear solves consume.
    The boundary entry (Dirichlet node) is forced to zero.
    """
    grid = u.grid
    k = params.k
    g = cell_gradients(grid, u.values)
    um = 0.5 * (u.values[:-1] + u.values[1:])
    b1, b2 = _cell_coefficients(params, grid, weights)
    V = grid.cell_volumes
    a_cell = b1 + b2 * _abs_pow(um, k)
    flux = 2.0 * a_cell * g * V / grid.cell_widths

    grad = np.zeros(grid.m + 1)
    grad[:-1] -= flux
    grad[1:] += flux
    if k > 0.0:
        if delta_reg is None:
            delta_reg = 1e-10 * float(np.max(np.abs(u.values), initial=0.0))
        ds = b2 * k * _signed_pow_km1(um, k, delta_reg) * g * g * V
        grad[:-1] += 0.5 * ds
        grad[1:] += 0.5 * ds
    grad -= 2.0 * params.lam * grid.weights * u.values
    grad[-1] = 0.0
    return grad


def energy_hessian_tridiag(
    params: ProblemParams,
    u: RadialField,
    weights: Optional[GeneralWeights] = None,
    delta_reg: Optional[float] = None,
) -> np.ndarray:
    """Exact tridiagonal Hessian d^2 E/du_i du_j in solve_banded layout.

    The energy is a sum of per-cell terms coupling only neighbouring
    nodes plus a diagonal mass term, so the Hessian is tridiagonal.
    Returned as a (3, m+1) array: row 0 superdiagonal (shifted right),
    row 1 diagonal, row 2 subdiagonal (shifted left).
    """
    grid = u.grid
    k = params.k
    g = cell_gradients(grid, u.values)
    um = 0.5 * (u.values[:-1] + u.values[1:])
    b1, b2 = _cell_coefficients(params, grid, weights)
    V = grid.cell_volumes
    h = grid.cell_widths
    a_cell = b1 + b2 * _abs_pow(um, k)
    if k > 0.0:
        if delta_reg is None:
            delta_reg = 1e-10 * float(np.max(np.abs(u.values), initial=0.0))
        ap = b2 * k * _signed_pow_km1(um, k, delta_reg)
        if k >= 2.0:
            app = b2 * k * (k - 1.0) * _abs_pow(um, k - 2.0) if k > 2.0 else b2 * k
        else:
            s2 = um * um + delta_reg * delta_reg
            app = b2 * k * s2 ** ((k - 4.0) / 2.0) * (s2 + (k - 2.0) * um * um)
    else:
        ap = np.zeros(grid.m)
        app = np.zeros(grid.m)

    curv = 0.25 * app * g * g * V
    stiff = 2.0 * a_cell * V / (h * h)
    cross = 2.0 * ap * g * V / h

    ab = np.zeros((3, grid.m + 1))
    ab[1, :-1] += curv - cross + stiff
    ab[1, 1:] += curv + cross + stiff
    ab[0, 1:] += curv - stiff  # superdiagonal entries H_{i,i+1}
    ab[2, :-1] += curv - stiff  # subdiagonal entries H_{i+1,i}
    ab[1, :] -= 2.0 * params.lam * grid.weights
    # Dirichlet row/column at the boundary node
    ab[1, -1] = 1.0
    ab[0, -1] = 0.0
    ab[2, -2] = 0.0
    return ab


def el_gradient(
    params: ProblemParams,
    u: RadialField,
    weights: Optional[GeneralWeights] = None,
    delta_reg: Optional[float] = None,
) -> RadialField:
    """L^2 gradient G(u) of the energy, as a nodal field.

    G represents -2 div(a grad u) + k b2 |u|^(k-2) u |u'|^2 - 2 lam u in
    the weak (integrated-by-parts) discrete sense; the boundary row is
    forced to zero.
    """
    raw = energy_gradient_raw(params, u, weights, delta_reg)
    vals = raw / u.grid.weights
    vals[-1] = 0.0
    return RadialField(u.grid, vals)


def theta_multiplier(
    params: ProblemParams,
    u: RadialField,
    weights: Optional[GeneralWeights] = None,
) -> float:
    """Constraint multiplier (2/q)(grad2 - lam*mass) + ((k+2)/q)*nonlinear.

    Positive for lam <= alpha*lambda1 and u != 0.  Note the companion
    convention: the strong-form optimality equation holds with the
    multiplier scaled by q/2 (see el_residual).
    """
    if not np.any(u.values):
        raise ZeroFieldError("multiplier undefined on the zero field")
    e = energy(params, u, weights)
    q = params.q
    return (2.0 / q) * (e.grad2 - params.lam * e.mass) + (
        (params.k + 2.0) / q
    ) * e.nonlinear


def el_residual(
    params: ProblemParams,
    u: RadialField,
    weights: Optional[GeneralWeights] = None,
    delta_reg: Optional[float] = None,
) -> float:
    """Normalized optimality residual of the constrained problem.

    Computes || G(u)/2 - Theta_EL |u|^(q-2) u ||_{L^2} over interior
    nodes, scaled by 1/||u||_{H^1-seminorm}.  Theta_EL = (q/2) * theta
    is the multiplier in the convention that makes the strong-form
    equation exact at critical points (pairing the equation with u
    forces this scaling; the q/2-free value is reported by
    theta_multiplier).
    """
    nq = lq_norm(u, params.q)
    if abs(nq - 1.0) > 1e-8:
        raise ValueError(f"el_residual requires ||u||_q = 1, got {nq}")
    grid = u.grid
    G = el_gradient(params, u, weights, delta_reg).values
    theta_el = (params.q / 2.0) * theta_multiplier(params, u, weights)
    psi = np.abs(u.values) ** (params.q - 2.0) * u.values
    res = 0.5 * G - theta_el * psi
    res2 = float(np.dot(grid.weights[:-1], res[:-1] ** 2))
    semin = np.sqrt(h1_seminorm_sq(grid, u.values))
    if semin == 0.0:
        raise ZeroFieldError("residual undefined on the zero field")
    return np.sqrt(res2) / semin


def pohozaev_residual(params: ProblemParams, u: RadialField) -> PohozaevCheck:
    """Pohozaev identity check for approximate critical points.

    lhs = (1/2)(beta - k n/q) * nonlinear
          + (1/2) |u'(R)|^2 * R * omega_{n-1} R^(n-1),
    rhs = lam * mass.  For star-shaped domains and lam >= 0 the lhs is
    nonnegative whenever beta >= k n/q.
    """
    from .grid import differentiate

    grid = u.grid
    e = energy(params, u)
    du_R = differentiate(grid, u.values)[-1]
    boundary = 0.5 * du_R**2 * grid.R * grid.surface_factor * grid.R ** (grid.n - 1)
    lhs = 0.5 * (params.beta - params.beta_lin) * e.nonlinear + boundary
    rhs = params.lam * e.mass
    return PohozaevCheck(lhs=lhs, rhs=rhs, residual=lhs - rhs)


def save_field(path, u: RadialField) -> None:
    """Two-column text serialization (r, u) with a shape header."""
    g = u.grid
    with open(path, "w") as fh:
        fh.write(f"# radial-field n={g.n} R={g.R:.17g} m={g.m}\n")
        for r, v in zip(g.nodes, u.values):
            fh.write(f"{r:.17g} {v:.17g}\n")


def load_field(path, grid: Optional[RadialGrid] = None) -> RadialField:
    """Load a serialized field; rebuilds the grid from the node column
    unless a matching grid is supplied."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# radial-field"):
            raise ValueError(f"not a radial-field file: {path}")
        meta = dict(tok.split("=") for tok in header.split()[2:])
        data = np.loadtxt(fh)
    r, v = data[:, 0], data[:, 1]
    n = int(meta["n"])
    if grid is None:
        grid = grid_from_nodes(r, n)
    else:
        if grid.n != n or grid.m != int(meta["m"]) or not np.allclose(grid.nodes, r):
            raise ValueError("supplied grid does not match the serialized field")
    return RadialField(grid, v)
