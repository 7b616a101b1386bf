"""Linearized cos(n theta) response of the stationary plaque.

Perturbing the interface to ``r = 1 - eps + tau cos(n theta)`` and keeping
the O(tau) part gives, for the radial amplitudes (L1, H1, F1, p1),

    Lap_n L1 = dR_L . X1
    Lap_n H1 = dR_H . X1
    D Lap_n F1 - p*' F1' - F*' p1' = dR_F . X1
    Lap_n p1 = dR_p . X1                       (the "f8" forcing)

with ``X1 = (L1, H1, F1)``, Neumann rows at ``r = 1`` and, at ``r = 1 - eps``,

    -X1' + beta X1 = X*'' - beta X*'    (X = L, H with beta1; F with beta2)
    p1 = (1 - n^2) / (1 - eps)^2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import _kernels
from .discretization import RadialGrid
from .errors import SingularSystemError
from .kernel import annulus_factor, solve_annulus_mode
from .model import ModelParams
from .steady import SteadyState, linear_block, second_derivatives_at_inner

RCOND_MIN = 1e-13


@dataclass(frozen=True, eq=False)
class LinearCoefficients:
    """Nodewise multipliers of (L1, H1, F1) in each linearized equation.

    ``jac[e, v]`` is d(rhs of equation e)/d(variable v) at the steady state,
    with e = L, H, F, p and v = L, H, F. ``dF`` and ``dp`` are the steady
    gradients F*' and p*' entering the F-equation transport coupling.
    """

    jac: np.ndarray
    dF: np.ndarray
    dp: np.ndarray

    @property
    def f5(self) -> np.ndarray:
        return self.jac[0]

    @property
    def f6(self) -> np.ndarray:
        return self.jac[1]

    @property
    def f7(self) -> np.ndarray:
        return self.jac[2]

    @property
    def f8(self) -> np.ndarray:
        return self.jac[3]


@dataclass(frozen=True, eq=False)
class ModeSolution:
    n: int
    grid: RadialGrid
    L1n: np.ndarray
    H1n: np.ndarray
    F1n: np.ndarray
    p1n: np.ndarray
    bdata_L: float
    bdata_H: float
    bdata_F: float
    G: float
    p1n_prime_inner: float
    J2n: float
    f8_samples: np.ndarray
    rcond: float

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def homogenized(self, params: ModelParams):
        """(L1 - bdata_L/beta1, H1 - bdata_H/beta1, F1 - bdata_F/beta2)."""
        return (
            self.L1n - self.bdata_L / params.beta1,
            self.H1n - self.bdata_H / params.beta1,
            self.F1n - self.bdata_F / params.beta2,
        )


def pressure_datum(n: int, eps: float) -> float:
    return (1.0 - n * n) / (1.0 - eps) ** 2


def mode_boundary_data(state: SteadyState, params: ModelParams | None = None):
    """``X*'' - beta X*'`` at ``r = 1 - eps`` for X = L, H, F (independent of n)."""
    p = state.params if params is None else params
    L2, H2, F2, _ = second_derivatives_at_inner(state, p)
    dL = p.beta1 * (state.Lstar[0] - p.L0)
    dH = p.beta1 * (state.Hstar[0] - p.H0)
    dF = p.beta2 * state.Fstar[0]
    return L2 - p.beta1 * dL, H2 - p.beta1 * dH, F2 - p.beta2 * dF


def linearized_rhs_coefficients(state: SteadyState, params: ModelParams | None = None) -> LinearCoefficients:
    p = state.params if params is None else params
    pars = _kernels.pack_rates(p, state.rho4)
    jac = _kernels.reaction_jacobian(state.Lstar, state.Hstar, state.Fstar, pars)
    D1 = state.grid.D1
    dF = D1 @ (state.Fstar - state.Fstar[-1])
    dp = D1 @ (state.pstar - state.pstar[-1])
    return LinearCoefficients(jac=np.asarray(jac), dF=dF, dp=dp)


def assemble_mode_system(state: SteadyState, n: int, params: ModelParams | None = None):
    """Scaled 4N x 4N matrix and right-hand side of the mode-n system.

    The last block solves for ``p1 - G`` rather than ``p1``.
    """
    p = state.params if params is None else params
    grid = state.grid
    N = grid.N
    eps = grid.eps
    co = linearized_rhs_coefficients(state, p)
    A = eps * eps * linear_block(grid, n, p, co.jac, co.dF, co.dp)
    b = np.zeros(4 * N)
    bL, bH, bF = mode_boundary_data(state, p)
    G = pressure_datum(n, eps)
    D1 = grid.D1
    for e in range(4):
        top, bot = e * N, (e + 1) * N - 1
        A[top] = 0.0
        A[bot] = 0.0
        A[bot, e * N : (e + 1) * N] = eps * D1[-1]
    for e, beta, data in ((0, p.beta1, bL), (1, p.beta1, bH), (2, p.beta2, bF)):
        top = e * N
        A[top, top : top + N] = -eps * D1[0]
        A[top, top] += eps * beta
        b[top] = eps * data
    # the pressure unknown is q = p1 - G, which is O(n eps) instead of
    # O(n^2); Lap_n G = n^2 G / r^2 moves to the right-hand side
    A[3 * N, 3 * N] = 1.0
    b[3 * N + 1 : 4 * N - 1] = -eps * eps * n * n * G / grid.nodes[1:-1] ** 2
    return A, b, (bL, bH, bF, G), co


def solve_mode(state: SteadyState, params: ModelParams | None = None, n: int = 2) -> ModeSolution:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise ValueError(f"mode number must be a nonnegative integer, got {n!r}")
    n = int(n)
    p = state.params if params is None else params
    grid = state.grid
    N = grid.N
    eps = grid.eps
    A, b, (bL, bH, bF, G), co = assemble_mode_system(state, n, p)
    # row equilibration: the pressure Dirichlet row and the scaled PDE rows
    # differ by orders of magnitude and the raw system loses digits in p1'
    w = 1.0 / np.max(np.abs(A), axis=1)
    A = A * w[:, None]
    b = b * w
    lu, piv = linalg.lu_factor(A, check_finite=False)
    anorm = np.linalg.norm(A, 1)
    rcond, info = linalg.lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or not rcond > RCOND_MIN:
        raise SingularSystemError(f"mode {n}: reciprocal condition {rcond:.3e}", rcond=float(rcond), n=n)
    x = linalg.lu_solve((lu, piv), b, check_finite=False)
    L1, H1, F1, q = x[:N], x[N : 2 * N], x[2 * N : 3 * N], x[3 * N :]
    p1 = q + G
    f8 = co.jac[3, 0] * L1 + co.jac[3, 1] * H1 + co.jac[3, 2] * F1
    dp1 = float(grid.D1[0] @ q)
    J2n = (dp1 - eps * p.mu / (p.gamma + p.H0) - annulus_factor(n, eps)) / eps**2
    return ModeSolution(
        n=n,
        grid=grid,
        L1n=L1,
        H1n=H1,
        F1n=F1,
        p1n=p1,
        bdata_L=float(bL),
        bdata_H=float(bH),
        bdata_F=float(bF),
        G=float(G),
        p1n_prime_inner=dp1,
        J2n=float(J2n),
        f8_samples=f8,
        rcond=float(rcond),
    )


def mode_via_kernel(state: SteadyState, params: ModelParams | None, n: int, mode_sol: ModeSolution) -> np.ndarray:
    """p1^n rebuilt from the closed-form annulus solution with the direct f8 samples."""
    p = state.params if params is None else params
    eta = p.mu / (p.gamma + p.H0)
    ks = solve_annulus_mode(n, eta, mode_sol.f8_samples - eta, mode_sol.G, state.grid)
    return ks.psi


def mode_via_kernel_solution(state: SteadyState, params: ModelParams | None, n: int, mode_sol: ModeSolution):
    p = state.params if params is None else params
    eta = p.mu / (p.gamma + p.H0)
    return solve_annulus_mode(n, eta, mode_sol.f8_samples - eta, mode_sol.G, state.grid)


def mode_to_csv(sol: ModeSolution) -> str:
    lines = [
        f"# n={sol.n},J2n={sol.J2n!r},p1n_prime_inner={sol.p1n_prime_inner!r}",
        "r,L1n,H1n,F1n,p1n",
    ]
    for row in zip(sol.r, sol.L1n, sol.H1n, sol.F1n, sol.p1n):
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
