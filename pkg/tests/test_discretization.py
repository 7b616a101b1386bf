from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plaquebif.discretization import (
    SCHEMES,
    Dirichlet,
    Neumann,
    Robin,
    assemble_mode_operator,
    build_grid,
    richardson_error,
)
from plaquebif.errors import ClosureError, GridError
from plaquebif.kernel import harmonic_pressure_mode


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("N", [16, 64, 128])
def test_differentiation_invariants(scheme, N):
    eps = 0.01
    g = build_grid(eps, N, scheme)
    r = g.nodes
    # stretched-coordinate units keep the checks eps-independent
    assert np.max(np.abs(g.D1 @ np.ones(N))) * eps <= 1e-12 * N
    assert np.max(np.abs(g.D1 @ r - 1.0)) * eps <= 1e-10 * N
    assert np.max(np.abs(g.D2 @ (r - r[0]) ** 2 - 2.0)) * eps**2 <= 1e-9 * N**2


def test_endpoints_and_ordering():
    g = build_grid(0.05, 33)
    assert g.nodes[0] == 1 - 0.05 and g.nodes[-1] == 1.0
    assert np.all(np.diff(g.nodes) > 0)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_quadrature_exact_for_r(scheme):
    eps = 0.02
    g = build_grid(eps, 40, scheme)
    exact = 0.5 * (1 - (1 - eps) ** 2)
    assert g.integrate(g.nodes) == pytest.approx(exact, rel=1e-13)
    c = g.cumulative(g.nodes)
    assert np.allclose(c, 0.5 * (g.nodes**2 - (1 - eps) ** 2), rtol=0, atol=1e-15)


def test_fd_cumulative_fourth_order():
    errs = []
    for N in (17, 33, 65):
        g = build_grid(0.1, N)
        c = g.cumulative(np.exp(5 * g.nodes))
        errs.append(np.max(np.abs(c - (np.exp(5 * g.nodes) - np.exp(5 * g.nodes[0])) / 5)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 3.7)


def test_fd_laplacian_second_order():
    errs = []
    for N in (33, 65, 129):
        g = build_grid(0.1, N)
        op = assemble_mode_operator(g, 3)
        psi = op.solve(np.zeros(N), 1.0, 0.0)
        exact = (g.nodes**3 + g.nodes**-3) / ((0.9) ** 3 + 0.9**-3)
        errs.append(np.max(np.abs(psi - exact)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)


@pytest.mark.parametrize("n", [0, 1, 2, 5])
def test_mode_operator_reproduces_harmonic(n):
    eps = 0.01
    g = build_grid(eps, 48, "stretched-collocation")
    G = (1 - n * n) / (1 - eps) ** 2
    psi = assemble_mode_operator(g, n).solve(np.zeros(48), G, 0.0)
    assert np.allclose(psi, harmonic_pressure_mode(n, eps, g.nodes), atol=1e-10 * max(1, abs(G)))


def test_robin_closure_row():
    g = build_grid(0.01, 64)
    op = assemble_mode_operator(g, 0, inner_bc=Robin(2.0), outer_bc=Neumann())
    psi = op.solve(np.zeros(64), 4.0, 0.0)
    # constants solve the homogeneous problem: -0 + 2 c = 4
    assert np.allclose(psi, 2.0, atol=1e-9)


def test_grid_errors():
    with pytest.raises(GridError, match="too coarse"):
        build_grid(0.01, 8)
    with pytest.raises(GridError):
        build_grid(0.0, 32)
    with pytest.raises(GridError):
        build_grid(0.01, 32, "spline")
    g = build_grid(0.01, 32)
    with pytest.raises(ClosureError):
        assemble_mode_operator(g, 1, outer_bc=Dirichlet())
    with pytest.raises(ValueError):
        assemble_mode_operator(g, 1.5)


def test_refined_grid_is_nested():
    g = build_grid(0.01, 33)
    f = g.refined()
    assert f.N == 65
    assert np.allclose(f.nodes[::2], g.nodes, rtol=0, atol=1e-15)


@given(st.integers(min_value=2, max_value=4))
def test_richardson_estimates_fd_error(k):
    g = build_grid(0.1, 17 * 2 ** (k - 2) + 1 - 2 ** (k - 2) if k > 2 else 17)
    f = g.refined()

    def solve(grid):
        return assemble_mode_operator(grid, 2).solve(np.zeros(grid.N), 1.0, 0.0)

    est = richardson_error(solve(g), solve(f), 2)
    exact = (g.nodes**2 + g.nodes**-2) / (0.81 + 1 / 0.81)
    true = np.max(np.abs(solve(g) - exact))
    assert 0.5 * true <= est <= 2.0 * true


def test_reference_grid_example():
    g = build_grid(0.01, 64, "uniform-FD2")
    assert g.nodes[0] == pytest.approx(0.99, abs=1e-15) and g.nodes[-1] == 1.0
    assert np.allclose(np.diff(g.nodes), 0.01 / 63, rtol=1e-9)
    for scheme in SCHEMES:
        assert build_grid(0.01, 64, scheme).integrate(np.ones(64)) == pytest.approx(0.01, rel=1e-13)


def test_fd_d2_of_cubic_second_order():
    errs = []
    for N in (17, 33, 65):
        g = build_grid(0.1, N)
        r = g.nodes
        errs.append(np.max(np.abs((g.D2 @ r**3 - 6 * r)[1:-1])))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    # exact for cubics up to rounding, or second order when not
    assert all(e < 1e-7 for e in errs) or np.all(orders > 1.8)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_n0_unit_forcing_is_xi(scheme):
    eps = 0.05
    g = build_grid(eps, 65 if scheme == "uniform-FD2" else 24, scheme)
    r = g.nodes

    def xi(x):
        return (1 - x**2) / 4 + 0.5 * np.log(x)

    psi = assemble_mode_operator(g, 0).solve(np.ones(g.N), 0.0, 0.0)
    tol = 1e-6 if scheme == "uniform-FD2" else 1e-11
    assert np.max(np.abs(psi - (xi(r) - xi(r[0])))) <= tol


def test_n3_dirichlet_matches_closed_form():
    eps = 0.02
    g = build_grid(eps, 32, "stretched-collocation")
    r = g.nodes
    a = 1 - eps
    G = 1.7
    A = G / (a**3 + a**-3)
    psi = assemble_mode_operator(g, 3).solve(np.zeros(g.N), G, 0.0)
    assert np.allclose(psi, A * (r**3 + r**-3), atol=1e-11)


def test_n5_harmonic_residual_vanishes_under_refinement():
    res = []
    for N in (17, 33, 65):
        g = build_grid(0.1, N)
        r = g.nodes
        psi = r**5 + r**-5
        lap = -(g.D2 @ psi) - (g.D1 @ psi) / r + 25 * psi / r**2
        res.append(np.max(np.abs(lap[1:-1])))
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(orders > 1.8)
    # the two-grid extrapolated bound for the finest residual
    assert res[2] <= res[1] / (2**2 - 1) * 1.5


@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("n", [1, 4, 9])
def test_operator_linear_in_n_squared(scheme, n):
    g = build_grid(0.01, 32, scheme)
    diff = assemble_mode_operator(g, n).matrix - assemble_mode_operator(g, 0).matrix
    expect = np.diag(n * n / g.nodes**2)
    # exact up to the single rounding of adding n^2/r^2 to the diagonal
    A = assemble_mode_operator(g, n).matrix
    ulp = 4 * np.finfo(float).eps * np.abs(np.diag(A))[1:-1]
    assert np.all(np.abs(np.diag(diff - expect))[1:-1] <= ulp)
    off = (diff - expect)[1:-1] - np.diag(np.diag(diff - expect))[1:-1]
    assert not off.any()
    # closure rows do not see the mode number
    assert not diff[0].any() and not diff[-1].any()
