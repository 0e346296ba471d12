"""Projected descent for the constrained infimum on the L^q sphere.

The iteration is a preconditioned gradient flow: the Euclidean gradient
of the discrete energy is mapped through the inverse of the current
elliptic operator (stiffness with the full weight a(r,u), plus mass),
the trial point is made nonnegative and retracted onto the L^q sphere
by renormalization, and an Armijo backtracking line search enforces
monotone descent.  Convergence is certified through the optimality
residual, the multiplier sign, and the Pohozaev identity.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dc_field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded
from scipy.optimize import minimize_scalar

from . import bubble as bubble_mod
from .eigen import lambda1 as eigen_lambda1
from .field import (
    EnergyBreakdown,
    PohozaevCheck,
    RadialField,
    _abs_pow,
    _cell_coefficients,
    energy,
    energy_gradient_raw,
    energy_hessian_tridiag,
    lq_norm,
    normalize_lq,
    pohozaev_residual,
    theta_multiplier,
)
from .grid import RadialGrid, h1_seminorm_sq
from .problem import ProblemParams, g_ratio

LINE_SEARCH_MAX_HALVINGS = 60


@dataclass(frozen=True)
class SolverOptions:
    max_iter: int = 3000
    tol_el: float = 1e-6
    step0: float = 1.0
    armijo_factor: float = 0.5
    armijo_c: float = 1e-4
    delta_reg: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.tol_el <= 0:
            raise ValueError("tol_el must be positive")
        if not 0.0 < self.armijo_factor < 1.0:
            raise ValueError("armijo_factor must lie in (0,1)")


@dataclass(frozen=True)
class MinimizeReport:
    u: RadialField
    s_value: float
    theta: float
    el_res: float
    pohozaev: PohozaevCheck
    width: float
    peak: float
    iterations: int
    converged: bool
    certificate: Dict[str, object]
    init_label: str = ""


def _precond_banded(
    params: ProblemParams, grid: RadialGrid, u: np.ndarray
) -> np.ndarray:
    """Lower-banded (2 x m) matrix of the weighted stiffness plus mass."""
    um = 0.5 * (u[:-1] + u[1:])
    b1, b2 = _cell_coefficients(params, grid, None)
    a_cell = b1 + b2 * _abs_pow(um, params.k)
    c = a_cell * grid.cell_volumes / grid.cell_widths**2
    m = grid.m
    ab = np.zeros((2, m))
    ab[0, :] = c[:m]
    ab[0, 1:] += c[: m - 1]
    ab[1, : m - 1] = -c[: m - 1]
    ab[0, :] += grid.weights[:m]
    # relative floor: graded meshes shrink the first diagonal entries
    # with the cell volume, which would blow up the solve
    ab[0, :] += 1e-12 * float(np.max(ab[0]))
    return ab


def _el_residual_from_raw(
    params: ProblemParams,
    grid: RadialGrid,
    u: np.ndarray,
    raw: np.ndarray,
    e: EnergyBreakdown,
) -> float:
    """Optimality residual reusing an already computed gradient."""
    q = params.q
    theta_el = (e.grad2 - params.lam * e.mass) + 0.5 * (params.k + 2.0) * e.nonlinear
    psi = np.abs(u) ** (q - 2.0) * u
    w = grid.weights
    res = 0.5 * raw / w - theta_el * psi
    res2 = float(np.dot(w[:-1], res[:-1] ** 2))
    semin2 = h1_seminorm_sq(grid, u)
    return np.sqrt(res2 / semin2)


def _newton_polish(
    params: ProblemParams,
    grid: RadialGrid,
    u: np.ndarray,
    opts: SolverOptions,
    max_newton: int = 50,
) -> Tuple[np.ndarray, float, int, bool]:
    """Bordered Newton iteration on the optimality system.

    Unknowns are the nodal values and the (doubled) multiplier; the
    Jacobian block is the exact tridiagonal energy Hessian shifted by
    the constraint curvature, solved with two banded backsolves per
    step.  Damped by residual-decrease backtracking."""
    q = params.q
    w = grid.weights
    u = u.copy()

    def residuals(u, mu2):
        uf = RadialField(grid, u)
        e = energy(params, uf)
        raw = energy_gradient_raw(params, uf, delta_reg=opts.delta_reg)
        psi = np.abs(u) ** (q - 2.0) * u
        G = raw - mu2 * w * psi
        G[-1] = 0.0
        C = float(np.dot(w, np.abs(u) ** q)) - 1.0
        merit = float(np.sum(G[:-1] ** 2 / w[:-1])) + C * C
        return e, raw, psi, G, C, merit

    e = energy(params, RadialField(grid, u))
    mu2 = 2.0 * (
        (e.grad2 - params.lam * e.mass) + 0.5 * (params.k + 2.0) * e.nonlinear
    )
    e, raw, psi, G, C, merit = residuals(u, mu2)
    it = 0
    for it in range(1, max_newton + 1):
        el_res = _el_residual_from_raw(params, grid, u, raw, e)
        if el_res <= opts.tol_el and abs(C) <= 1e-12:
            return u, el_res, it - 1, True
        # mild curvature regularization: the exact |u|^(k-2) curvature is
        # singular at zeros of u; a lagged Jacobian keeps Newton stable
        # while the residual (computed with the sharp gradient) still
        # certifies optimality.
        delta_h = max(opts.delta_reg or 0.0, 1e-4 * float(np.max(np.abs(u))))
        ab = energy_hessian_tridiag(params, RadialField(grid, u), delta_reg=delta_h)
        ab = ab.copy()
        ab[1, :-1] -= mu2 * (q - 1.0) * w[:-1] * np.abs(u[:-1]) ** (q - 2.0)
        # symmetric Jacobi scaling: graded meshes spread the diagonal over
        # tens of orders of magnitude (rows scale with cell volume), which
        # the banded LU cannot survive unscaled
        dscale = np.sqrt(np.maximum(np.abs(ab[1]), 1e-300))
        abs_ = np.empty_like(ab)
        abs_[1] = ab[1] / (dscale * dscale)
        abs_[0] = 0.0
        abs_[2] = 0.0
        abs_[0, 1:] = ab[0, 1:] / (dscale[1:] * dscale[:-1])
        abs_[2, :-1] = ab[2, :-1] / (dscale[:-1] * dscale[1:])
        wpsi = w * psi
        wpsi[-1] = 0.0
        try:
            z1 = solve_banded((1, 1), abs_, G / dscale) / dscale
            z2 = solve_banded((1, 1), abs_, wpsi / dscale) / dscale
        except np.linalg.LinAlgError:
            break
        denom = q * float(wpsi @ z2)
        if denom == 0.0 or not np.isfinite(denom):
            break
        dmu = (q * float(wpsi @ z1) - C) / denom
        du = -z1 + dmu * z2
        du[-1] = 0.0
        step = 1.0
        accepted = False
        for _ in range(25):
            u_try = u + step * du
            u_try[-1] = 0.0
            mu_try = mu2 + step * dmu
            if np.all(np.isfinite(u_try)):
                out = residuals(u_try, mu_try)
                if np.isfinite(out[-1]) and out[-1] < merit:
                    u, mu2 = u_try, mu_try
                    e, raw, psi, G, C, merit = out
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
    el_res = _el_residual_from_raw(params, grid, u, raw, e)
    return u, el_res, it, el_res <= opts.tol_el


def make_initializer(
    name: str,
    params: ProblemParams,
    grid: RadialGrid,
    seed: int = 0,
) -> RadialField:
    """Named starting fields: 'eigen', 'bubble:<eps>', 'random'."""
    if name == "eigen":
        u0 = eigen_lambda1(grid).phi
    elif name.startswith("bubble:"):
        eps = float(name.split(":", 1)[1])
        spec = bubble_mod.BubbleSpec(eps, grid.R / 4.0, grid.R / 2.0)
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            u0 = bubble_mod.omega_eps(grid, spec)
    elif name == "random":
        rng = np.random.default_rng(seed)
        vals = (0.5 + rng.random(grid.m + 1)) * (1.0 - (grid.nodes / grid.R) ** 2)
        vals[-1] = 0.0
        u0 = RadialField(grid, vals)
    else:
        raise ValueError(f"unknown initializer {name!r}")
    return normalize_lq(u0, params.q)


def minimize(
    params: ProblemParams,
    grid: RadialGrid,
    init: Union[RadialField, str],
    opts: SolverOptions = SolverOptions(),
    alpha_s_est: Optional[float] = None,
) -> MinimizeReport:
    """Run the projected descent from one starting field.

    Never raises on non-convergence: the report carries converged=False
    when the residual tolerance is not met within the budget.
    """
    label = init if isinstance(init, str) else "custom"
    if isinstance(init, str):
        u_field = make_initializer(init, params, grid, seed=opts.seed)
    else:
        u_field = normalize_lq(init, params.q)
    u = np.abs(u_field.values.copy())
    u[-1] = 0.0
    u /= lq_norm(RadialField(grid, u), params.q)

    q = params.q
    w = grid.weights
    tau = opts.step0
    e = energy(params, RadialField(grid, u))
    converged = False
    el_res = np.inf
    newton_switch = max(opts.tol_el, 1e-2)
    total_newton = 0
    it = 0
    for it in range(1, opts.max_iter + 1):
        uf = RadialField(grid, u)
        raw = energy_gradient_raw(params, uf, delta_reg=opts.delta_reg)
        el_res = _el_residual_from_raw(params, grid, u, raw, e)
        if el_res <= opts.tol_el:
            converged = True
            break
        if el_res <= newton_switch or it % 100 == 0:
            # descent has localized the minimizer; polish quadratically
            u_new, el_new, n_it, ok = _newton_polish(params, grid, u, opts)
            total_newton += n_it
            if ok:
                u = u_new
                u[-1] = 0.0
                u /= lq_norm(RadialField(grid, u), q)
                e = energy(params, RadialField(grid, u))
                el_res = el_new
                converged = True
                break
            # polish failed: tighten the switch and keep descending
            newton_switch = max(opts.tol_el, 0.1 * newton_switch)
        # gradient of the retracted energy E(u/||u||_q) at ||u||_q = 1
        theta_el = (e.grad2 - params.lam * e.mass) + 0.5 * (params.k + 2.0) * e.nonlinear
        psi = np.abs(u) ** (q - 2.0) * u
        grad_c = raw - 2.0 * theta_el * w * psi
        ab = _precond_banded(params, grid, u)
        cho = cholesky_banded(ab, lower=True)
        d = np.zeros(grid.m + 1)
        d[:-1] = cho_solve_banded((cho, True), grad_c[:-1])
        slope = float(grad_c @ d)
        # Armijo backtracking on the retracted trial point
        accepted = False
        for _ in range(LINE_SEARCH_MAX_HALVINGS):
            trial = np.abs(u - tau * d)
            trial[-1] = 0.0
            nrm = lq_norm(RadialField(grid, trial), q)
            if nrm == 0.0 or not np.all(np.isfinite(trial)):
                tau *= opts.armijo_factor
                continue
            trial /= nrm
            e_try = energy(params, RadialField(grid, trial))
            if e_try.total <= e.total - opts.armijo_c * tau * slope:
                accepted = True
                break
            tau *= opts.armijo_factor
        if not accepted:
            break
        u, e = trial, e_try
        tau = min(tau * 2.0, 1e6)

    u_final = RadialField(grid, u)
    e = energy(params, u_final)
    theta = theta_multiplier(params, u_final)
    poho = pohozaev_residual(params, u_final)
    diag = concentration_diagnostics(u_final, fit_bubble=False)
    nq = lq_norm(u_final, q)
    certificate: Dict[str, object] = {
        "s_value": e.total,
        "alpha_s_est": alpha_s_est,
        "below_alpha_s": (e.total < alpha_s_est) if alpha_s_est is not None else None,
        "s_nonnegative": e.total >= -1e-8,
        "k_admissible": params.k_admissible,
        "lq_constraint_gap": abs(nq - 1.0),
    }
    converged = converged and abs(nq - 1.0) <= 1e-10
    return MinimizeReport(
        u=u_final,
        s_value=e.total,
        theta=theta,
        el_res=el_res,
        pohozaev=poho,
        width=diag["width"],
        peak=diag["peak"],
        iterations=it + total_newton,
        converged=converged,
        certificate=certificate,
        init_label=label,
    )


def s_lambda_estimate(
    params: ProblemParams,
    grid: RadialGrid,
    opts: SolverOptions = SolverOptions(),
    n_starts: int = 5,
    alpha_s_est: Optional[float] = None,
) -> Dict[str, object]:
    """Multi-start minimization; returns the best report and all runs."""
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    names = ["eigen", "bubble:1e-2", "bubble:1e-3", "bubble:1e-4", "random"]
    reports: List[MinimizeReport] = []
    for name in names[:n_starts]:
        try:
            reports.append(minimize(params, grid, name, opts, alpha_s_est))
        except Exception as exc:  # aggregate per-run failures
            reports.append(
                MinimizeReport(
                    u=make_initializer("eigen", params, grid),
                    s_value=np.inf,
                    theta=np.nan,
                    el_res=np.inf,
                    pohozaev=PohozaevCheck(np.nan, np.nan, np.nan),
                    width=np.nan,
                    peak=np.nan,
                    iterations=0,
                    converged=False,
                    certificate={"error": repr(exc)},
                    init_label=name,
                )
            )
    best = min(reports, key=lambda r: r.s_value)
    return {"best": best, "all": reports}


def concentration_diagnostics(u: RadialField, fit_bubble: bool = True) -> Dict[str, float]:
    """Peak height, half-max width, and distance to the bubble family.

    bubble_mismatch is the L^q distance between u and the best-fitting
    normalized concentration profile over eps (golden-section on log eps);
    skipped when fit_bubble is False.
    """
    grid = u.grid
    q = 2.0 * grid.n / (grid.n - 2)
    vals = u.values
    peak = float(vals[0])
    half = peak / 2.0
    below = np.nonzero(vals <= half)[0]
    if below.size == 0 or peak <= 0:
        width = grid.R
    else:
        j = int(below[0])
        if j == 0:
            width = 0.0
        else:
            r0, r1 = grid.nodes[j - 1], grid.nodes[j]
            v0, v1 = vals[j - 1], vals[j]
            width = float(r0 + (half - v0) / (v1 - v0) * (r1 - r0)) if v1 != v0 else float(r1)
    out = {"peak": peak, "width": width, "bubble_mismatch": np.nan, "eps_fit": np.nan}
    if not fit_bubble:
        return out

    spec_r0, spec_r1 = grid.R / 4.0, grid.R / 2.0
    lo = max(grid.nodes[8] ** 2, 1e-14 * grid.R**2)
    hi = (grid.R / 2.0) ** 2

    def mismatch(log_eps: float) -> float:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            wb = bubble_mod.omega_eps(
                grid, bubble_mod.BubbleSpec(np.exp(log_eps), spec_r0, spec_r1)
            )
        wb = normalize_lq(wb, q)
        return float(np.dot(grid.weights, np.abs(vals - wb.values) ** q) ** (1.0 / q))

    res = minimize_scalar(
        mismatch, bounds=(np.log(lo), np.log(hi)), method="bounded",
        options={"xatol": 1e-3},
    )
    out["bubble_mismatch"] = float(res.fun)
    out["eps_fit"] = float(np.exp(res.x))
    return out


def phase_sweep(
    params: ProblemParams,
    axis: str,
    values: Sequence[float],
    grid: RadialGrid,
    opts: SolverOptions = SolverOptions(),
    n_starts: int = 2,
    alpha_s_est: Optional[float] = None,
) -> List[Dict[str, object]]:
    """Re-run the multi-start estimate along one parameter axis."""
    from .problem import derive

    if axis not in ("beta", "lambda", "k"):
        raise ValueError(f"axis must be beta, lambda or k, got {axis!r}")
    if len(values) == 0:
        raise ValueError("empty sweep value list")
    if alpha_s_est is None:
        ladder = bubble_mod.default_eps_ladder(grid.R, 6, 12)
        spec = bubble_mod.BubbleSpec(float(ladder[-1]), grid.R / 4, grid.R / 2)
        table = bubble_mod.scan(params, grid, spec, ladder)
        alpha_s_est = params.alpha * bubble_mod.estimate_constants(params, table).S_est
    rows = []
    for v in sorted(values):
        kw = dict(
            n=params.n, alpha=params.alpha, beta=params.beta, k=params.k, lam=params.lam
        )
        kw["lam" if axis == "lambda" else axis] = float(v)
        p = derive(kw["n"], kw["alpha"], kw["beta"], kw["k"], kw["lam"])
        est = s_lambda_estimate(p, grid, opts, n_starts=n_starts, alpha_s_est=alpha_s_est)
        best: MinimizeReport = est["best"]
        rows.append(
            {
                "axis_value": float(v),
                "s_value": best.s_value,
                "theta": best.theta,
                "el_res": best.el_res,
                "pohozaev_res": best.pohozaev.residual,
                "width": best.width,
                "peak": best.peak,
                "converged": best.converged,
                "iterations": best.iterations,
                "s_over_alpha_s": best.s_value / alpha_s_est,
                "k_admissible": p.k_admissible,
            }
        )
    return rows


def contradiction_audit(
    report: MinimizeReport,
    alpha_s_est: float,
    params: ProblemParams,
    t: Optional[float] = None,
) -> Dict[str, object]:
    """Numerical audit of the three-relation contradiction chain.

    Given the converged minimizer u* and a norm level t in (0,1], the
    audit evaluates at v = t*u*: (a) E(v) + alpha*S*(1-t^q)^(2/q) vs the
    attained infimum, (b) E(v) + (k/2)*nonlinear(v) vs
    alpha*S*(1-t^q)^(2/q-1)*t^q, and (c) g_ratio(t) vs 1 + k/2.  For
    k <= q-2 the three cannot hold together with t < 1, which is the
    mechanism forcing full norm capture.
    """
    q = params.q
    if t is None:
        t = 1.0
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0,1], got {t}")
    v = RadialField(report.u.grid, t * report.u.values)
    ev = energy(params, v)
    s_val = report.s_value
    if t == 1.0:
        return {
            "t": 1.0,
            "a_lhs": ev.total,
            "a_rhs": s_val,
            "b_lhs": None,
            "b_rhs": None,
            "g_value": None,
            "g_bound": 1.0 + params.k / 2.0,
            "degenerate": True,
        }
    shrink = (1.0 - t**q) ** (2.0 / q)
    return {
        "t": t,
        "a_lhs": ev.total + alpha_s_est * shrink,
        "a_rhs": s_val,
        "b_lhs": ev.total + 0.5 * params.k * ev.nonlinear,
        "b_rhs": alpha_s_est * (1.0 - t**q) ** (2.0 / q - 1.0) * t**q,
        "g_value": g_ratio(t, q),
        "g_bound": 1.0 + params.k / 2.0,
        "degenerate": False,
    }


def write_report_csv(path, rows: List[Dict[str, object]], header_comment: str = "") -> None:
    """One CSV row per run: axis/solver outputs in a fixed column order."""
    cols = [
        "axis_value",
        "s_value",
        "theta",
        "el_res",
        "pohozaev_res",
        "width",
        "peak",
        "converged",
        "iterations",
    ]
    with open(path, "w", newline="") as fh:
        if header_comment:
            fh.write(header_comment)
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow(
                [
                    f"{row[c]:.17g}" if isinstance(row[c], float) else row[c]
                    for c in cols
                ]
            )


def report_to_row(report: MinimizeReport, axis_value: float = 0.0) -> Dict[str, object]:
    return {
        "axis_value": axis_value,
        "s_value": report.s_value,
        "theta": report.theta,
        "el_res": report.el_res,
        "pohozaev_res": report.pohozaev.residual,
        "width": report.width,
        "peak": report.peak,
        "converged": report.converged,
        "iterations": report.iterations,
    }
