"""Closed-form solution machinery for the mode-n radial operator on the annulus.

Solves ``Lap_n psi = eta + f(r)`` on ``[1 - eps, 1]`` with ``psi'(1) = 0`` and
``psi(1 - eps) = G``, where ``Lap_n = -d2/dr2 - (1/r) d/dr + n^2/r^2``, as

    psi = psi1 + A r^n + B r^-n + K[f]      (n >= 1)
    psi = psi1 + A + K[f]                   (n = 0)

with ``psi1`` the particular solution for the constant ``eta`` and ``K[f]``
the variation-of-parameters integral operator. This path shares no linear
algebra with the collocation solve and serves as its cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import RadialGrid


def _check_mode(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise ValueError(f"mode number must be a nonnegative integer, got {n!r}")
    return int(n)


def psi1(n: int, eta: float, r) -> np.ndarray:
    """Particular solution of ``Lap_n psi = eta`` with ``psi'(1) = 0``."""
    n = _check_mode(n)
    r = np.asarray(r, dtype=float)
    if n == 0:
        return eta * ((1.0 - r * r) / 4.0 + 0.5 * np.log(r))
    if n == 2:
        return eta * (r * r / 8.0 - (r * r / 4.0) * np.log(r))
    return eta / (n * n - 4.0) * (r * r - (2.0 / n) * r**n)


def psi1_prime(n: int, eta: float, r) -> np.ndarray:
    n = _check_mode(n)
    r = np.asarray(r, dtype=float)
    if n == 0:
        return eta * (-r / 2.0 + 0.5 / r)
    if n == 2:
        return -eta * (r / 2.0) * np.log(r)
    return eta / (n * n - 4.0) * (2.0 * r - 2.0 * r ** (n - 1))


def annulus_factor(n: int, eps: float) -> float:
    """``n (1 - n^2) [(1-eps)^(2n) - 1] / ((1-eps)^3 [(1-eps)^(2n) + 1])``.

    This is the exact (p1^n)'(1 - eps) of the pure-harmonic pressure mode
    with interface datum (1 - n^2)/(1 - eps)^2.
    """
    n = _check_mode(n)
    a = 1.0 - eps
    q = a ** (2 * n)
    return n * (1.0 - n * n) * (q - 1.0) / (a**3 * (q + 1.0))


def k_apply(n: int, f_samples, grid: RadialGrid):
    """``(K[f], K[f]')`` at the grid nodes.

    ``K[f]' `` comes from its own integral representation, not from
    differencing ``K[f]``.
    """
    n = _check_mode(n)
    f = np.asarray(f_samples, dtype=float)
    r = grid.nodes
    if n == 0:
        cb = grid.cumulative(r * f)
        ca = grid.cumulative(np.log(r) * r * f)
        tail_b = cb[-1] - cb
        tail_a = ca[-1] - ca
        K = -tail_a + np.log(r) * tail_b
        Kp = tail_b / r
        return K, Kp
    c1 = grid.cumulative(r ** (1 - n) * f)
    I1 = c1[-1] - c1
    I2 = grid.cumulative(r ** (1 + n) * f)
    rn = r**n
    K = (rn * I1 + I2 / rn) / (2.0 * n)
    Kp = 0.5 * (r ** (n - 1) * I1 - I2 / r ** (n + 1))
    return K, Kp


def k_bounds(n: int, eps: float) -> tuple[float, float]:
    """Multipliers of max|f| bounding max|K[f]| and max|K[f]'|.

    For n >= 1 these are min(eps/(2n), 1/n^2) and min(eps/2, 1/n). For
    n = 0 the derivative bound is eps/(1 - eps): the integral
    (1/r) * int_r^1 s ds reaches eps (1 - eps/2)/(1 - eps) at r = 1 - eps.
    """
    n = _check_mode(n)
    if n == 0:
        return eps, eps / (1.0 - eps)
    return min(eps / (2 * n), 1.0 / n**2), min(eps / 2.0, 1.0 / n)


@dataclass(frozen=True, eq=False)
class KernelSolution:
    n: int
    eta: float
    G: float
    f_samples: np.ndarray
    psi1: np.ndarray
    Kf: np.ndarray
    Kf_prime: np.ndarray
    A: float
    B: float
    psi: np.ndarray
    psi_prime: np.ndarray


def solve_annulus_mode(n: int, eta: float, f_samples, G: float, grid: RadialGrid) -> KernelSolution:
    n = _check_mode(n)
    f = np.asarray(f_samples, dtype=float)
    r = grid.nodes
    a = 1.0 - grid.eps
    p1 = psi1(n, eta, r)
    p1p = psi1_prime(n, eta, r)
    K, Kp = k_apply(n, f, grid)
    if n == 0:
        A = G - p1[0] - K[0]
        B = 0.0
        psi = p1 + A + K
        dpsi = p1p + Kp
    else:
        an = a**n
        A = (an * (G - p1[0] - K[0]) - Kp[-1] / n) / (1.0 + an * an)
        B = A + Kp[-1] / n
        rn = r**n
        psi = p1 + A * rn + B / rn + K
        dpsi = p1p + n * (A * r ** (n - 1) - B / r ** (n + 1)) + Kp
    return KernelSolution(
        n=n,
        eta=float(eta),
        G=float(G),
        f_samples=f,
        psi1=p1,
        Kf=K,
        Kf_prime=Kp,
        A=float(A),
        B=float(B),
        psi=psi,
        psi_prime=dpsi,
    )


def one_minus_eps_power_bounds(n: int, eps: float) -> tuple[float, float]:
    """``(1 - n eps, 1 - n eps + n^2 eps^2 / 2)``, which bracket ``(1 - eps)^n``."""
    n = _check_mode(n)
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    lower = 1.0 - n * eps
    upper = 1.0 - n * eps + 0.5 * n * n * eps * eps
    value = (1.0 - eps) ** n
    slack = 4 * np.finfo(float).eps * max(1.0, abs(upper))
    if not (lower - slack <= value <= upper + slack):
        raise AssertionError(f"(1-eps)^n={value!r} outside [{lower!r}, {upper!r}]")
    return lower, upper


def harmonic_pressure_mode(n: int, eps: float, r) -> np.ndarray:
    """Closed-form ``Lap_n p = 0`` solution with ``p'(1)=0``, ``p(1-eps)=(1-n^2)/(1-eps)^2``."""
    n = _check_mode(n)
    a = 1.0 - eps
    r = np.asarray(r, dtype=float)
    G = (1.0 - n * n) / a**2
    if n == 0:
        return np.full_like(r, G)
    return G / (a**n + a ** (-n)) * (r**n + r ** (-n))


__all__ = [
    "KernelSolution",
    "annulus_factor",
    "harmonic_pressure_mode",
    "k_apply",
    "k_bounds",
    "one_minus_eps_power_bounds",
    "psi1",
    "psi1_prime",
    "solve_annulus_mode",
]
