"""Shared fixtures: reference grids, eigenvalues and a converged run.

The expensive objects (fine grids, first eigenvalues, the certified
minimizer) are built once per session and reused across test modules.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from minlab import (
    SolverOptions,
    derive,
    lambda1,
    make_grid,
    minimize,
)
from minlab.bubble import BubbleSpec, default_eps_ladder, estimate_constants, scan

# wide cutoff plateau: keeps the O(sqrt(eps)) tail remainder small so the
# asymptotic fits reach their limiting slopes on the desk-scale ladder
WIDE_R0 = 0.85
WIDE_R1 = 1.0


@pytest.fixture(scope="session")
def grid_n5_fine():
    return make_grid(1.0, 4096, 3.0, 5)


@pytest.fixture(scope="session")
def grid_n4_fine():
    return make_grid(1.0, 4096, 3.0, 4)


@pytest.fixture(scope="session")
def grid_n5_eig():
    return make_grid(1.0, 4096, 2.0, 5)


@pytest.fixture(scope="session")
def grid_n4_eig():
    return make_grid(1.0, 4096, 2.0, 4)


@pytest.fixture(scope="session")
def grid_n5_solver():
    return make_grid(1.0, 1024, 2.0, 5)


@pytest.fixture(scope="session")
def lam1_n4(grid_n4_eig):
    return lambda1(grid_n4_eig).lambda1


@pytest.fixture(scope="session")
def lam1_n5(grid_n5_eig):
    return lambda1(grid_n5_eig).lambda1


@pytest.fixture(scope="session")
def lam1_solver(grid_n5_solver):
    return lambda1(grid_n5_solver).lambda1


@pytest.fixture(scope="session")
def alpha_s_n5(grid_n5_fine):
    """alpha * S estimate on the fine n=5 grid (alpha = 1)."""
    params = derive(5, 1.0, 4.0, 1.0, 0.0)
    ladder = default_eps_ladder(1.0, 6, 14)
    spec = BubbleSpec(float(ladder[-1]), WIDE_R0, WIDE_R1)
    table = scan(params, grid_n5_fine, spec, ladder)
    return estimate_constants(params, table).S_est


@pytest.fixture(scope="session")
def converged_run(grid_n5_solver, lam1_solver):
    """Certified minimizer at n=5, k=1, beta=4, lambda = 0.9 * lambda1."""
    params = derive(5, 1.0, 4.0, 1.0, 0.9 * lam1_solver)
    report = minimize(
        params, grid_n5_solver, "eigen", SolverOptions(max_iter=2000, seed=0)
    )
    return params, report


def shooting_lambda1(n, r_end=1.0):
    """Independent oracle for the first radial Dirichlet eigenvalue.

    Integrates u'' + (n-1)/r u' + lam u = 0 outward from a series start
    near r=0 and bisects lam on the sign of u(R).  The bracket (1, 40)
    contains exactly the first eigenvalue for n in {4, 5} on R=1.
    """

    def shoot(lam):
        r0 = 1e-8
        u0 = 1.0 - lam * r0**2 / (2.0 * n)
        du0 = -lam * r0 / n

        def rhs(r, y):
            return [y[1], -(n - 1.0) / r * y[1] - lam * y[0]]

        sol = solve_ivp(
            rhs, (r0, r_end), [u0, du0], method="DOP853", rtol=1e-12, atol=1e-14
        )
        return sol.y[0, -1]

    lo, hi = 1.0, 40.0
    f_lo = shoot(lo)
    assert f_lo > 0 and shoot(hi) < 0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if shoot(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.fixture(scope="session")
def shooting_n4():
    return shooting_lambda1(4)


@pytest.fixture(scope="session")
def shooting_n5():
    return shooting_lambda1(5)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
