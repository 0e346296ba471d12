"""Acceptance gate: the nine headline checks at pinned tolerances.

Each test prints exactly one pass/fail line on the live terminal so the
suite's verdict is readable straight from the pytest log.
"""

import os
import time

import numpy as np
import pytest

from minlab import (
    RadialField,
    SolverOptions,
    derive,
    energy,
    g_aux,
    g_ratio,
    lambda1,
    lambda1_weighted_limit_check,
    make_grid,
    minimize,
    normalize_lq,
)
from minlab.bubble import (
    BubbleSpec,
    default_eps_ladder,
    estimate_constants,
    fit_scaling,
    scan,
    upper_bound_experiment,
)
from minlab.cli import EXIT_OK, main as cli_main
from minlab.eigen import rayleigh_quotient
from minlab.field import energy_gradient_raw

from conftest import WIDE_R0, WIDE_R1


def announce(capsys, num, ok, detail):
    with capsys.disabled():
        print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def test_criterion_1_bubble_norm_asymptotics(grid_n5_fine, grid_n4_fine, capsys):
    t0 = time.time()
    ladder = default_eps_ladder(1.0, 6, 14)
    spec = BubbleSpec(float(ladder[-1]), WIDE_R0, WIDE_R1)
    p5 = derive(5, 1.0, 4.0, 1.0, 0.0)
    table5 = scan(p5, grid_n5_fine, spec, ladder)
    k1 = estimate_constants(p5, table5).K1
    rem_fit = fit_scaling(table5.eps, table5.grad2 - k1)
    mass_fit = fit_scaling(table5.eps, table5.mass)

    p4 = derive(4, 1.0, 3.0, 1.0, 0.0)
    table4 = scan(p4, grid_n4_fine, spec, ladder)
    ratio4 = table4.mass[-4:] / (table4.eps[-4:] * np.abs(np.log(table4.eps[-4:])))
    spread4 = (np.max(ratio4) - np.min(ratio4)) / np.min(ratio4)
    elapsed = time.time() - t0

    ok = (
        abs(rem_fit.slope - 1.5) <= 0.15
        and abs(mass_fit.slope - 1.0) <= 0.05
        and spread4 < 0.05
        and elapsed < 60.0
    )
    announce(
        capsys,
        1,
        ok,
        f"grad remainder slope {rem_fit.slope:.3f} (target 1.5+-0.15), "
        f"mass slope {mass_fit.slope:.3f} (target 1+-0.05), "
        f"n=4 mass/(eps|log eps|) spread {spread4:.3f} (<0.05), {elapsed:.1f}s",
    )


def test_criterion_2_nonlinear_three_case_scaling(grid_n4_fine, capsys):
    ladder = default_eps_ladder(1.0, 6, 14)
    spec = BubbleSpec(float(ladder[-1]), WIDE_R0, WIDE_R1)
    cases = [(2.0, 0.5, False), (6.0, 1.5, False), (4.0, 1.5, True)]
    measured = []
    ok = True
    for beta, target, logc in cases:
        p = derive(4, 1.0, beta, 1.0, 0.0)
        table = scan(p, grid_n4_fine, spec, ladder)
        fit = fit_scaling(table.eps, table.nonlinear_norm, log_corrected=logc)
        measured.append((beta, fit.slope, target))
        ok = ok and abs(fit.slope - target) <= 0.1
    detail = ", ".join(
        f"beta={b:g}: slope {s:.3f} (target {t:g}+-0.1)" for b, s, t in measured
    )
    announce(capsys, 2, ok, detail)


def test_criterion_3_a_priori_estimate(grid_n5_fine, lam1_n5, alpha_s_n5, capsys):
    ladder = default_eps_ladder(1.0, 6, 14)
    spec = BubbleSpec(float(ladder[-1]), WIDE_R0, WIDE_R1)
    p = derive(5, 1.0, 4.0, 1.0, 0.5 * lam1_n5)
    out = upper_bound_experiment(p, grid_n5_fine, ladder, spec, s_est=alpha_s_n5)
    fit = out["deficit_fit"]
    p0 = derive(5, 1.0, 4.0, 1.0, 0.0)
    with pytest.warns(UserWarning):
        control = upper_bound_experiment(
            p0, grid_n5_fine, ladder, spec, s_est=alpha_s_n5
        )
    control_ok = control["best_energy"] >= control["alpha_s_est"] - 1e-6
    ok = (
        out["passes"]
        and fit is not None
        and abs(fit.slope - 1.0) <= 0.1
        and control_ok
    )
    announce(
        capsys,
        3,
        ok,
        f"comparison passes={out['passes']}, deficit slope "
        f"{fit.slope if fit else float('nan'):.3f} (target 1+-0.1), "
        f"lambda=0 control floor holds={control_ok}",
    )


def test_criterion_4_eigenvalue_module(
    grid_n4_eig, grid_n5_eig, shooting_n4, shooting_n5, rng, capsys
):
    lam_r1 = lambda1(make_grid(1.0, 1024, 1.0, 4)).lambda1
    lam_r2 = lambda1(make_grid(2.0, 1024, 1.0, 4)).lambda1
    scaling_ok = abs(lam_r2 / lam_r1 - 0.25) <= 1e-8

    lam4 = lambda1(grid_n4_eig).lambda1
    lam5 = lambda1(grid_n5_eig).lambda1
    rel4 = abs(lam4 - shooting_n4) / shooting_n4
    rel5 = abs(lam5 - shooting_n5) / shooting_n5
    shooting_ok = rel4 <= 1e-6 and rel5 <= 1e-6

    g = make_grid(1.0, 512, 2.0, 5)
    lam_g = lambda1(g).lambda1
    rayleigh_ok = True
    for _ in range(20):
        v = rng.standard_normal(g.m + 1) * (1.0 - g.nodes**2)
        v[-1] = 0.0
        rayleigh_ok = rayleigh_ok and rayleigh_quotient(g, v) >= lam_g - 1e-8

    p = derive(5, 1.0, 4.0, 1.0, 0.0)
    N_ladder = np.array([2.0**j for j in range(1, 9)])
    rows = lambda1_weighted_limit_check(p, g, N_ladder)
    gaps = np.array([q for _, q in rows]) - p.alpha * lam_g
    slope = fit_scaling(N_ladder, gaps).slope
    ladder_ok = abs(slope - (-p.k)) <= 0.05

    ok = scaling_ok and shooting_ok and rayleigh_ok and ladder_ok
    announce(
        capsys,
        4,
        ok,
        f"R-scaling ok={scaling_ok}, shooting rel err {rel4:.1e}/{rel5:.1e} "
        f"(<=1e-6), Rayleigh floor ok={rayleigh_ok}, "
        f"quotient gap slope {slope:.4f} (target -1+-0.05)",
    )


def test_criterion_5_minimizer_certification(
    converged_run, grid_n5_solver, alpha_s_n5, capsys
):
    t0 = time.time()
    params, report = converged_run
    second = minimize(
        params, grid_n5_solver, "bubble:1e-3", SolverOptions(max_iter=2000, seed=0)
    )
    poho_rel = abs(report.pohozaev.residual) / max(
        report.pohozaev.lhs, report.pohozaev.rhs
    )
    agree = abs(second.s_value - report.s_value) / abs(report.s_value)
    elapsed = time.time() - t0
    ok = (
        report.converged
        and second.converged
        and report.certificate["lq_constraint_gap"] <= 1e-10
        and report.el_res <= 1e-6
        and report.theta > 0.0
        and poho_rel <= 5.0 / grid_n5_solver.m
        and 0.0 <= report.s_value < alpha_s_n5
        and agree <= 1e-4
        and elapsed < 300.0
    )
    announce(
        capsys,
        5,
        ok,
        f"converged={report.converged}, el_res {report.el_res:.1e} (<=1e-6), "
        f"theta {report.theta:.3f} (>0), pohozaev rel {poho_rel:.1e} "
        f"(<= {5.0 / grid_n5_solver.m:.1e}), s {report.s_value:.6f} in "
        f"[0, {alpha_s_n5:.4f}), two-start rel gap {agree:.1e} (<=1e-4)",
    )


def test_criterion_6_g_ratio_suite(capsys):
    ts = np.linspace(1e-6, 1.0 - 1e-6, 1000)
    ok = True
    worst = 0.0
    for q in (4.0, 10.0 / 3.0, 3.0):
        gs = np.array([g_ratio(t, q) for t in ts])
        aux = np.array([g_aux(t, q) for t in ts])
        limit_gap = g_ratio(1e-6, q) - q / 2.0
        worst = max(worst, limit_gap)
        ok = ok and np.all(np.diff(gs) > 0) and limit_gap <= 1e-6
        ok = ok and np.all(aux >= -1e-12)
    announce(
        capsys,
        6,
        ok,
        f"monotone on 1e3-point grid for q in (4, 10/3, 3), "
        f"worst limit gap {worst:.1e} (<=1e-6), auxiliary >= -1e-12",
    )


def test_criterion_7_energy_floor_bounds(
    converged_run, grid_n5_solver, lam1_solver, capsys
):
    params, report = converged_run  # lambda = 0.9 alpha lambda1
    small_ok = report.s_value >= -1e-8
    vol = grid_n5_solver.volume
    ok = small_ok
    details = [f"lam<=a*lam1: s {report.s_value:.3e} >= -1e-8 ({small_ok})"]
    for factor in (1.5, 3.0):
        lam = factor * lam1_solver
        p = derive(5, 1.0, 4.0, 1.0, lam)
        rep = minimize(p, grid_n5_solver, "eigen", SolverOptions(max_iter=2000))
        bound = -(lam - p.alpha * lam1_solver) * vol ** (1.0 - 2.0 / p.q) - 1e-6
        this_ok = rep.s_value >= bound
        ok = ok and this_ok
        details.append(
            f"lam={factor:g}*a*lam1: s {rep.s_value:.3f} >= bound {bound:.3f} "
            f"({this_ok})"
        )
    announce(capsys, 7, ok, "; ".join(details))


def test_criterion_8_gradient_correctness(rng, capsys):
    g = make_grid(1.0, 96, 2.0, 5)
    h = 1e-5
    worst = 0.0
    ok = True
    for k, beta in ((0.0, 0.0), (1.0, 4.0), (2.0, 5.0)):
        p = derive(5, 1.0, beta, k, 0.8)
        u = normalize_lq(RadialField(g, 1.0 - g.nodes**2), p.q)
        raw = energy_gradient_raw(p, u)
        for _ in range(10):
            phi = rng.standard_normal(g.m + 1)
            phi[-1] = 0.0
            ep = energy(p, RadialField(g, u.values + h * phi)).total
            em = energy(p, RadialField(g, u.values - h * phi)).total
            fd = (ep - em) / (2.0 * h)
            an = float(raw @ phi)
            rel = abs(fd - an) / max(1.0, abs(an))
            worst = max(worst, rel)
            ok = ok and rel <= 1e-5
    announce(
        capsys,
        8,
        ok,
        f"30 random directions over (k,beta) in ((0,0),(1,4),(2,5)): "
        f"worst rel err {worst:.1e} (<=1e-5)",
    )


def test_criterion_9_determinism(tmp_path, capsys):
    cfg = tmp_path / "det.ini"
    cfg.write_text(
        "\n".join(
            [
                "[problem]",
                "n = 5",
                "alpha = 1.0",
                "beta = 4.0",
                "k = 1.0",
                "lambda = 10.0",
                "[grid]",
                "R = 1.0",
                "m = 256",
                "gamma_mesh = 2.0",
                "[bubble]",
                "eps_pow_lo = 6",
                "eps_pow_hi = 12",
                "[solver]",
                "max_iter = 800",
                "seed = 3",
                "",
            ]
        )
    )
    args = ["sweep", "--config", str(cfg), "--axis", "lambda", "--values", "5,10,15"]
    bodies = []
    for i, threads in enumerate((None, None, "2")):
        out = tmp_path / f"run{i}"
        if threads is not None:
            os.environ["MINLAB_THREADS"] = threads
        try:
            rc = cli_main(args + ["--out", str(out)])
        finally:
            os.environ.pop("MINLAB_THREADS", None)
        assert rc == EXIT_OK
        with open(out / "sweep.csv") as fh:
            bodies.append([l for l in fh if not l.startswith("# timestamp")])
    ok = bodies[0] == bodies[1] == bodies[2]
    announce(
        capsys,
        9,
        ok,
        "repeated sweep (and a threaded rerun) byte-identical "
        "outside the timestamp header",
    )
