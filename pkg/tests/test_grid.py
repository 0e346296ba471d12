"""Graded radial meshes, quadrature and discrete differentiation."""

import numpy as np
import pytest
from scipy.integrate import quad

from minlab import differentiate, integrate, make_grid
from minlab.grid import (
    cell_gradients,
    grid_from_nodes,
    h1_seminorm_sq,
    surface_area_factor,
)


def test_surface_factor():
    assert abs(surface_area_factor(4) - 2.0 * np.pi**2) < 1e-14
    assert abs(surface_area_factor(3) - 4.0 * np.pi) < 1e-14


def test_unit_ball_volume_exact():
    g = make_grid(1.0, 100, 1.0, 4)
    vol = integrate(g, np.ones(g.m + 1))
    assert abs(vol - np.pi**2 / 2.0) <= 1e-12 * vol
    assert abs(g.volume - np.pi**2 / 2.0) <= 1e-12 * vol


def test_scaled_ball_volume():
    g = make_grid(2.0, 100, 2.0, 4)
    vol = integrate(g, np.ones(g.m + 1))
    assert abs(vol - 2.0 * np.pi**2 * 2.0**4 / 4.0) <= 1e-10 * vol


def test_linear_integrand_exact():
    g = make_grid(1.0, 100, 1.0, 4)
    # f(r) = r is piecewise linear, so the hat quadrature is exact
    val = integrate(g, g.nodes)
    assert abs(val - 2.0 * np.pi**2 / 5.0) <= 1e-12 * val


def test_zero_integrand():
    g = make_grid(1.0, 32, 1.0, 4)
    assert integrate(g, np.zeros(g.m + 1)) == 0.0


def test_make_grid_validation():
    with pytest.raises(ValueError):
        make_grid(0.0, 100, 1.0, 4)
    with pytest.raises(ValueError):
        make_grid(1.0, 8, 1.0, 4)
    with pytest.raises(ValueError):
        make_grid(1.0, 100, 0.5, 4)
    with pytest.raises(ValueError):
        make_grid(1.0, 100, 1.0, 1)


def test_integrate_shape_validation():
    g = make_grid(1.0, 32, 1.0, 4)
    with pytest.raises(ValueError):
        integrate(g, np.ones(g.m))
    with pytest.raises(ValueError):
        integrate(g, np.full(g.m + 1, np.nan))


def test_weights_positive_and_nodes_graded():
    for gam in (1.0, 2.0, 3.0):
        g = make_grid(1.0, 64, gam, 5)
        assert np.all(g.weights > 0)
        assert g.nodes[0] == 0.0 and g.nodes[-1] == 1.0
        assert np.all(np.diff(g.nodes) > 0)
        expected = (np.arange(65) / 64.0) ** gam
        assert np.allclose(g.nodes, expected, atol=1e-15)


def test_quadrature_convergence_order():
    exact = quad(lambda r: np.cos(3 * r) * r**3, 0.0, 1.0, epsabs=1e-14)[0]
    exact *= surface_area_factor(4)
    errs = []
    for m in (64, 128, 256):
        g = make_grid(1.0, m, 1.0, 4)
        errs.append(abs(integrate(g, np.cos(3 * g.nodes)) - exact))
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


def test_differentiate_linear_exact():
    g = make_grid(1.0, 80, 2.0, 4)
    du = differentiate(g, 1.0 - g.nodes)
    assert np.max(np.abs(du + 1.0)) <= 1e-10


def test_differentiate_quadratic_exact():
    g = make_grid(1.0, 80, 2.0, 4)
    du = differentiate(g, g.nodes**2)
    assert np.max(np.abs(du - 2.0 * g.nodes)) <= 1e-9


def test_differentiate_constant_zero():
    g = make_grid(1.0, 40, 1.0, 4)
    assert np.max(np.abs(differentiate(g, np.full(g.m + 1, 3.0)))) <= 1e-12


def test_differentiate_shape_validation():
    g = make_grid(1.0, 32, 1.0, 4)
    with pytest.raises(ValueError):
        differentiate(g, np.ones(5))


def test_seminorm_second_order():
    # int |grad(1 - r^2)|^2 over the unit ball = 4 omega_{n-1}/(n+2)
    n = 4
    exact = 4.0 * surface_area_factor(n) / (n + 2)
    errs = []
    for m in (128, 256, 512):
        g = make_grid(1.0, m, 1.0, n)
        errs.append(abs(h1_seminorm_sq(g, 1.0 - g.nodes**2) - exact))
    assert errs[0] / errs[1] >= 3.5
    assert errs[1] / errs[2] >= 3.5


def test_integration_by_parts():
    # int u' v r^{n-1} dr + int u (v r^{n-1})' dr = 0 for u(R)=v(R)=0,
    # realized discretely to O(m^-2)
    n, omega = 4, surface_area_factor(4)
    errs = []
    for m in (256, 512):
        g = make_grid(1.0, m, 1.0, n)
        r = g.nodes
        u = np.sin(np.pi * r)
        v = 1.0 - r**2
        du = differentiate(g, u)
        dv = differentiate(g, v)
        term1 = integrate(g, du * v)
        # int u v' r^{n-1} + (n-1) int u v r^{n-2}: fold the r powers in
        with np.errstate(divide="ignore", invalid="ignore"):
            over_r = np.where(r > 0, u * v / r, 0.0)
        term2 = integrate(g, u * dv) + (n - 1) * integrate(g, over_r)
        errs.append(abs(term1 + term2) / omega)
    assert errs[0] <= 1e-3
    assert errs[0] / errs[1] >= 3.0


def test_grid_from_nodes_roundtrip():
    g = make_grid(1.0, 64, 3.0, 5)
    g2 = grid_from_nodes(g.nodes, 5)
    assert g == g2
    assert np.allclose(g.weights, g2.weights)


def test_cell_gradients():
    g = make_grid(1.0, 64, 1.0, 4)
    gr = cell_gradients(g, 2.0 * g.nodes)
    assert np.allclose(gr, 2.0)
