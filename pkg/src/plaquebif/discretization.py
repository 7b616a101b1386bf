"""Radial grids on the thin annulus [1 - eps, 1] and the mode-n radial operator.

Nodes are stored in increasing ``r``: node 0 is the plaque/blood interface
``r = 1 - eps`` and node ``N - 1`` is the vessel wall ``r = 1``. Everything is
built on the stretched coordinate ``s = (r - (1 - eps)) / eps`` in [0, 1], so
the conditioning of the operators does not depend on eps.

Sign convention for the interface closure: the outward normal of the plaque
points toward the blood, i.e. in the ``-r`` direction, so a Robin row reads
``-psi'(1 - eps) + beta * psi(1 - eps) = g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import linalg

from . import _kernels
from .errors import ClosureError, GridError

SCHEMES = ("uniform-FD2", "stretched-collocation")
MIN_NODES = 16
DEFAULT_N = 128
TEST_N = 64


@dataclass(frozen=True, eq=False)
class RadialGrid:
    eps: float
    N: int
    scheme: str
    nodes: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    quad: np.ndarray
    cumint: np.ndarray = field(repr=False)

    @property
    def r(self) -> np.ndarray:
        return self.nodes

    @property
    def order(self) -> int | None:
        """Algebraic convergence order, or None for spectral schemes."""
        return 2 if self.scheme == "uniform-FD2" else None

    def integrate(self, values) -> float:
        return float(self.quad @ np.asarray(values, dtype=float))

    def cumulative(self, values) -> np.ndarray:
        """Running integral from ``1 - eps`` to every node."""
        y = np.ascontiguousarray(values, dtype=float)
        if self.scheme == "uniform-FD2":
            return _kernels.cumulative_cubic(y, self.eps / (self.N - 1))
        return self.cumint @ y

    def refined(self) -> "RadialGrid":
        """Grid with halved spacing whose even nodes coincide with this one."""
        return build_grid(self.eps, 2 * self.N - 1, self.scheme)


def _fd2_matrices(N: int):
    h = 1.0 / (N - 1)
    D1 = np.zeros((N, N))
    D2 = np.zeros((N, N))
    idx = np.arange(1, N - 1)
    D1[idx, idx - 1] = -0.5 / h
    D1[idx, idx + 1] = 0.5 / h
    D1[0, :3] = np.array([-3.0, 4.0, -1.0]) / (2 * h)
    D1[-1, -3:] = np.array([1.0, -4.0, 3.0]) / (2 * h)
    D2[idx, idx - 1] = 1.0 / h**2
    D2[idx, idx] = -2.0 / h**2
    D2[idx, idx + 1] = 1.0 / h**2
    D2[0, :4] = np.array([2.0, -5.0, 4.0, -1.0]) / h**2
    D2[-1, -4:] = np.array([-1.0, 4.0, -5.0, 2.0]) / h**2
    s = np.linspace(0.0, 1.0, N)
    return s, D1, D2


def _fd2_cumint(N: int) -> np.ndarray:
    """Matrix form of the cubic-interpolant running integral on [0, 1]."""
    h = 1.0 / (N - 1)
    seg = np.zeros((N - 1, N))
    seg[0, :4] = [9.0, 19.0, -5.0, 1.0]
    for i in range(1, N - 2):
        seg[i, i - 1 : i + 3] = [-1.0, 13.0, 13.0, -1.0]
    seg[N - 2, N - 4 :] = [1.0, -5.0, 19.0, 9.0]
    out = np.zeros((N, N))
    out[1:] = np.cumsum(seg, axis=0) * (h / 24.0)
    return out


def _cheb_matrices(N: int):
    """Chebyshev-Lobatto collocation on [0, 1], nodes ascending."""
    m = N - 1
    x = -np.cos(np.pi * np.arange(N) / m)
    c = np.ones(N)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(N)
    X = x[:, None] - x[None, :]
    Dx = np.outer(c, 1.0 / c) / (X + np.eye(N))
    Dx -= np.diag(Dx.sum(axis=1))
    # coefficient-space running integral from x = -1
    V = C.chebvander(x, m)
    integ = np.zeros((N + 1, N))
    for j in range(N):
        e = np.zeros(N)
        e[j] = 1.0
        integ[:, j] = C.chebint(e, lbnd=-1.0)
    Cx = C.chebvander(x, N) @ integ @ np.linalg.inv(V)
    s = 0.5 * (x + 1.0)
    D1 = 2.0 * Dx
    return s, D1, D1 @ D1, 0.5 * Cx


def build_grid(eps: float, N: int = TEST_N, scheme: str = "uniform-FD2") -> RadialGrid:
    if N < MIN_NODES:
        raise GridError(f"grid too coarse for boundary closures (N={N} < {MIN_NODES})")
    if not (0.0 < eps < 1.0):
        raise GridError(f"eps must lie in (0, 1), got {eps!r}")
    if scheme == "uniform-FD2":
        s, D1s, D2s = _fd2_matrices(N)
        cum = _fd2_cumint(N)
    elif scheme == "stretched-collocation":
        s, D1s, D2s, cum = _cheb_matrices(N)
    else:
        raise GridError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    nodes = (1.0 - eps) + eps * s
    nodes[0] = 1.0 - eps
    nodes[-1] = 1.0
    cum = eps * cum
    return RadialGrid(
        eps=float(eps),
        N=int(N),
        scheme=scheme,
        nodes=nodes,
        D1=D1s / eps,
        D2=D2s / eps**2,
        quad=cum[-1].copy(),
        cumint=cum,
    )


def radial_laplacian(grid: RadialGrid, n: int = 0) -> np.ndarray:
    """Discrete ``-psi'' - psi'/r + n^2 psi / r^2`` (all rows)."""
    r = grid.nodes
    out = -grid.D2 - grid.D1 / r[:, None]
    if n:
        out = out + np.diag(n * n / r**2)
    return out


@dataclass(frozen=True)
class Robin:
    """``-psi' + beta psi = g`` at ``r = 1 - eps``."""

    beta: float


@dataclass(frozen=True)
class Dirichlet:
    """``psi = g`` at ``r = 1 - eps``."""


@dataclass(frozen=True)
class Neumann:
    """``psi' = g`` at ``r = 1``."""


@dataclass(frozen=True, eq=False)
class ModeOperator:
    grid: RadialGrid
    n: int
    inner_bc: Robin | Dirichlet
    outer_bc: Neumann
    matrix: np.ndarray

    def solve(self, rhs, inner: float = 0.0, outer: float = 0.0) -> np.ndarray:
        """Solve with interior forcing ``rhs`` (node samples) and boundary data."""
        b = np.array(rhs, dtype=float, copy=True)
        if b.ndim == 0:
            b = np.full(self.grid.N, float(b))
        b[0] = inner
        b[-1] = outer
        return linalg.solve(self.matrix, b)

    def interior_residual(self, psi, rhs) -> np.ndarray:
        return (self.matrix @ psi - rhs)[1:-1]


def inner_closure_row(grid: RadialGrid, bc) -> np.ndarray:
    row = np.zeros(grid.N)
    if isinstance(bc, Robin):
        row[:] = -grid.D1[0]
        row[0] += bc.beta
    elif isinstance(bc, Dirichlet):
        row[0] = 1.0
    else:
        raise ClosureError(f"unsupported inner closure {bc!r}")
    return row


def assemble_mode_operator(grid: RadialGrid, n: int, inner_bc=Dirichlet(), outer_bc=Neumann()) -> ModeOperator:
    if int(n) != n or n < 0:
        raise ValueError(f"mode number must be a nonnegative integer, got {n!r}")
    if not isinstance(outer_bc, Neumann):
        raise ClosureError(f"unsupported outer closure {outer_bc!r}; only Neumann at r = 1")
    n = int(n)
    A = radial_laplacian(grid, n)
    A[0] = inner_closure_row(grid, inner_bc)
    A[-1] = grid.D1[-1]
    return ModeOperator(grid=grid, n=n, inner_bc=inner_bc, outer_bc=outer_bc, matrix=A)


def richardson_error(coarse, fine, order: int | None) -> float:
    """Max-norm error estimate for ``coarse`` from a nested refinement ``fine``.

    ``fine`` lives on ``grid.refined()``; its even-indexed samples line up
    with ``coarse``. Spectral schemes (order None) get the plain difference.
    """
    diff = np.max(np.abs(np.asarray(fine)[::2] - np.asarray(coarse)))
    if order is None:
        return float(diff)
    return float(diff * 2**order / (2**order - 1))
