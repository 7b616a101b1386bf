from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plaquebif import _kernels, modes
from plaquebif.errors import SingularSystemError
from plaquebif.kernel import annulus_factor
from plaquebif.model import REF_A, REF_B, asymptotic_coefficients
from plaquebif.modes import (
    assemble_mode_system,
    linearized_rhs_coefficients,
    mode_boundary_data,
    mode_to_csv,
    mode_via_kernel,
    pressure_datum,
    solve_mode,
)

from .conftest import EPS_SWEEP, steady_for


def test_pressure_datum():
    assert pressure_datum(1, 0.1) == 0.0
    assert pressure_datum(3, 0.0) == -8.0
    assert pressure_datum(0, 0.5) == pytest.approx(4.0)


def test_boundary_data_independent_of_mode():
    s = steady_for(REF_A, 0.01)
    m2, m5 = solve_mode(s, n=2), solve_mode(s, n=5)
    assert (m2.bdata_L, m2.bdata_H, m2.bdata_F) == (m5.bdata_L, m5.bdata_H, m5.bdata_F)
    assert (m2.bdata_L, m2.bdata_H, m2.bdata_F) == pytest.approx(mode_boundary_data(s))


@pytest.mark.parametrize("params", [REF_A, REF_B], ids=["A", "B"])
def test_linear_coefficients_match_finite_differences(params):
    s = steady_for(params, 0.01)
    co = linearized_rhs_coefficients(s)
    pars = _kernels.pack_rates(s.params, s.rho4)
    base = (s.Lstar, s.Hstar, s.Fstar)
    for v in range(3):
        h = 1e-6 * np.maximum(1.0, np.abs(base[v]))
        up = [x.copy() for x in base]
        um = [x.copy() for x in base]
        up[v] += h
        um[v] -= h
        fd = (_kernels.reaction_terms_numpy(*up, pars) - _kernels.reaction_terms_numpy(*um, pars)) / (2 * h)
        for e in range(4):
            scale = max(1.0, float(np.max(np.abs(co.jac[e, v]))))
            assert np.max(np.abs(fd[e] - co.jac[e, v])) <= 1e-6 * scale, (e, v)


def test_f8_samples_are_pressure_row():
    s = steady_for(REF_B, 0.01)
    m = solve_mode(s, n=2)
    co = linearized_rhs_coefficients(s)
    expect = co.f8[0] * m.L1n + co.f8[1] * m.H1n + co.f8[2] * m.F1n
    assert np.allclose(m.f8_samples, expect, rtol=0, atol=1e-14 * np.max(np.abs(expect)))


@pytest.mark.parametrize("n", [0, 2, 4])
def test_mode_solution_satisfies_system(n):
    s = steady_for(REF_A, 0.01)
    A, b, _, _ = assemble_mode_system(s, n)
    m = solve_mode(s, n=n)
    x = np.concatenate([m.L1n, m.H1n, m.F1n, m.p1n - m.G])
    assert np.max(np.abs(A @ x - b)) <= 1e-10 * max(1.0, np.max(np.abs(b)))
    assert m.p1n[0] == pytest.approx(m.G, abs=1e-12)


def test_mode_linear_in_boundary_data(monkeypatch):
    s = steady_for(REF_A, 0.01)
    m1 = solve_mode(s, n=3)
    orig = modes.mode_boundary_data
    monkeypatch.setattr(modes, "mode_boundary_data", lambda st_, p=None: tuple(2 * v for v in orig(st_, p)))
    monkeypatch.setattr(modes, "pressure_datum", lambda n, eps: 2 * ((1.0 - n * n) / (1.0 - eps) ** 2))
    m2 = solve_mode(s, n=3)
    for a, b in ((m1.L1n, m2.L1n), (m1.F1n, m2.F1n), (m1.p1n, m2.p1n)):
        assert np.allclose(b, 2 * a, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("params", [REF_A, REF_B], ids=["A", "B"])
def test_homogenized_perturbation_is_order_eps(params):
    sizes = []
    for eps in EPS_SWEEP:
        s = steady_for(params, eps)
        hom = solve_mode(s, n=2).homogenized(s.params)
        sizes.append(max(float(np.max(np.abs(x))) for x in hom))
    ratios = np.array(sizes[:-1]) / np.array(sizes[1:])
    assert np.all((ratios > 1.5) & (ratios < 2.6))


@pytest.mark.parametrize("params", [REF_A, REF_B], ids=["A", "B"])
def test_ldl_response_matches_leading_order(params):
    gaps = []
    for eps in EPS_SWEEP:
        s = steady_for(params, eps)
        ac = asymptotic_coefficients(s.params)
        m = solve_mode(s, n=2)
        gaps.append(abs(m.L1n[0] - (s.params.mu / s.params.lambda_ - ac.Lstar1)))
    # the gap is O(eps): each halving of eps shrinks it by at least 1.5
    ratios = np.array(gaps[:-1]) / np.array(gaps[1:])
    assert np.all(ratios > 1.5)


@pytest.mark.parametrize("params", [REF_A, REF_B], ids=["A", "B"])
def test_J2n_bounded_in_eps(params):
    for n in (2, 3):
        vals = [abs(solve_mode(steady_for(params, e), n=n).J2n) for e in EPS_SWEEP]
        assert max(vals) <= 1.25 * vals[0]


def test_J2n_definition():
    s = steady_for(REF_B, 0.005)
    m = solve_mode(s, n=3)
    p = s.params
    eps = s.grid.eps
    rebuilt = eps * p.mu / (p.gamma + p.H0) + annulus_factor(3, eps) + eps**2 * m.J2n
    assert rebuilt == pytest.approx(m.p1n_prime_inner, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("n", [1, 2, 6])
def test_kernel_path_agrees(n):
    s = steady_for(REF_A, 0.01, N=128)
    m = solve_mode(s, n=n)
    psi = mode_via_kernel(s, None, n, m)
    assert np.max(np.abs(psi - m.p1n)) <= 1e-4 * max(1.0, float(np.max(np.abs(m.p1n))))


def test_singular_system_reported(monkeypatch):
    s = steady_for(REF_A, 0.01)
    monkeypatch.setattr(modes, "RCOND_MIN", 1.0)
    with pytest.raises(SingularSystemError) as exc:
        solve_mode(s, n=2)
    assert exc.value.code == "singular-system"


def test_rejects_bad_mode_numbers():
    s = steady_for(REF_A, 0.01)
    for bad in (-1, 2.5, True):
        with pytest.raises(ValueError):
            solve_mode(s, n=bad)


def test_mode_csv():
    s = steady_for(REF_A, 0.01)
    m = solve_mode(s, n=2)
    lines = mode_to_csv(m).strip().splitlines()
    assert lines[0].startswith("# n=2,")
    assert lines[1] == "r,L1n,H1n,F1n,p1n"
    assert len(lines) == 2 + s.grid.N


@settings(max_examples=10)
@given(st.integers(0, 30))
def test_pressure_response_tracks_harmonic_factor(n):
    s = steady_for(REF_A, 0.01)
    m = solve_mode(s, n=n)
    p = s.params
    eps = s.grid.eps
    # the forcing only shifts p1' by O(eps) relative to the harmonic factor
    gap = abs(m.p1n_prime_inner - annulus_factor(n, eps))
    assert gap <= 10 * eps * (1 + abs(p.mu)) + 1e-3 * abs(annulus_factor(n, eps))
