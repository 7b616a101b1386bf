"""Radially symmetric stationary plaque on the thin annulus.

Nested solve: for a fixed foam-cell death rate ``rho4`` a damped Newton
iteration gives the profiles (L*, H*, F*, p*) with the interface closures
and ``p*(1 - eps) = -1/(1 - eps)``; an outer bracketed Brent iteration then
picks ``rho4`` so that the integral flux condition ``Phi(rho4) = 0`` holds,
which is the discrete statement of ``p*'(1 - eps) = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, optimize

from . import _kernels
from .discretization import RadialGrid, radial_laplacian
from .errors import MaxIterationsError, MuBelowCriticalError, NewtonDivergedError
from .model import ModelParams, asymptotic_coefficients, require_valid

log = logging.getLogger(__name__)

TOL_NEWTON = 1e-11
MAX_NEWTON = 50
MAX_HALVINGS = 30


def tol_phi(eps: float) -> float:
    return 1e-10 * eps**2


@dataclass(frozen=True, eq=False)
class Profiles:
    L: np.ndarray
    H: np.ndarray
    F: np.ndarray
    p: np.ndarray
    residual_norm: float
    iterations: int
    history: tuple = ()

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.L, self.H, self.F, self.p])


@dataclass(frozen=True, eq=False)
class SteadyState:
    params: ModelParams
    grid: RadialGrid
    Lstar: np.ndarray
    Hstar: np.ndarray
    Fstar: np.ndarray
    pstar: np.ndarray
    rho4: float
    residual_norm: float
    phi_residual: float
    p2_inner: float
    J1: float
    deriv_max: float
    pprime_inner: float
    phi_evaluations: int = 0
    extra_sign_changes: tuple = field(default=())

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def profiles(self) -> Profiles:
        return Profiles(self.Lstar, self.Hstar, self.Fstar, self.pstar, self.residual_norm, 0)

    def diagnostics(self) -> dict:
        return {
            "params_hash": self.params.digest(),
            "eps": self.grid.eps,
            "N": self.grid.N,
            "scheme": self.grid.scheme,
            "mu": self.params.mu,
            "rho4": self.rho4,
            "phi_residual": self.phi_residual,
            "residual_norm": self.residual_norm,
            "p2_inner": self.p2_inner,
            "J1": self.J1,
            "deriv_max": self.deriv_max,
            "pprime_inner": self.pprime_inner,
        }


# --------------------------------------------------------------------------
# nonlinear residual and Jacobian
# --------------------------------------------------------------------------


def _split(u, N):
    return u[:N], u[N : 2 * N], u[2 * N : 3 * N], u[3 * N :]


def linear_block(grid: RadialGrid, n: int, params: ModelParams, jac, dF, dp) -> np.ndarray:
    """Interior-row matrix of the coupled (L, H, F, p) linear operator.

    Row blocks are, for mode ``n``::

        Lap_n L1 - dR_L/dX X1
        Lap_n H1 - dR_H/dX X1
        D Lap_n F1 - p*' F1' - F*' p1' - dR_F/dX X1
        Lap_n p1 - dR_p/dX X1

    with ``Lap_n = -d2/dr2 - (1/r) d/dr + n^2/r^2`` and ``jac`` the (4, 3, N)
    array of reaction partials. With ``n = 0`` this is the Newton Jacobian of
    the stationary residual; boundary rows are left for the caller.
    """
    N = grid.N
    lap = radial_laplacian(grid, n)
    D1 = grid.D1
    A = np.zeros((4 * N, 4 * N))
    diff = (lap, lap, params.D * lap - dp[:, None] * D1, lap)
    for e in range(4):
        rows = slice(e * N, (e + 1) * N)
        A[rows, rows] = diff[e] if e < 3 else lap
        for v in range(3):
            A[rows, v * N : (v + 1) * N] -= np.diag(jac[e, v])
    A[2 * N : 3 * N, 3 * N :] -= dF[:, None] * D1
    return A


def _residual(u, params: ModelParams, rho4: float, grid: RadialGrid, pars, lap, want_jac=True):
    N = grid.N
    eps = grid.eps
    L, H, F, p = _split(u, N)
    D1 = grid.D1
    R = _kernels.reaction_terms(L, H, F, pars)
    # Lap annihilates constants; subtracting the wall value keeps rounding
    # proportional to the O(eps^2) variation instead of the O(1) level.
    lapL = lap @ (L - L[-1])
    lapH = lap @ (H - H[-1])
    lapF = lap @ (F - F[-1])
    lapp = lap @ (p - p[-1])
    dF = D1 @ (F - F[-1])
    dp = D1 @ (p - p[-1])
    e2 = eps * eps
    res = np.empty(4 * N)
    res[:N] = e2 * (lapL - R[0])
    res[N : 2 * N] = e2 * (lapH - R[1])
    res[2 * N : 3 * N] = e2 * (params.D * lapF - dF * dp - R[2])
    res[3 * N :] = e2 * (lapp - R[3])
    L0 = params.L0
    dL0 = D1[0] @ (L - L[-1])
    dH0 = D1[0] @ (H - H[-1])
    dF0 = D1[0] @ (F - F[-1])
    res[0] = eps * (-dL0 + params.beta1 * (L[0] - L0))
    res[N] = eps * (-dH0 + params.beta1 * (H[0] - params.H0))
    res[2 * N] = eps * (-dF0 + params.beta2 * F[0])
    res[3 * N] = p[0] + 1.0 / (1.0 - eps)
    for e in range(4):
        X = u[e * N : (e + 1) * N]
        res[(e + 1) * N - 1] = eps * (D1[-1] @ (X - X[-1]))
    if not want_jac:
        return res, None
    jac = _kernels.reaction_jacobian(L, H, F, pars)
    J = e2 * linear_block(grid, 0, params, jac, dF, dp)
    for e in range(4):
        top = e * N
        bot = (e + 1) * N - 1
        J[top] = 0.0
        J[bot] = 0.0
        J[bot, e * N : (e + 1) * N] = eps * D1[-1]
    J[0, :N] = -eps * D1[0]
    J[0, 0] += eps * params.beta1
    J[N, N : 2 * N] = -eps * D1[0]
    J[N, N] += eps * params.beta1
    J[2 * N, 2 * N : 3 * N] = -eps * D1[0]
    J[2 * N, 2 * N] += eps * params.beta2
    J[3 * N, 3 * N] = 1.0
    return res, J


def steady_residual(u, params: ModelParams, rho4: float, grid: RadialGrid):
    """Scaled discrete residual and its analytic Jacobian at stacked ``u``."""
    pars = _kernels.pack_rates(params, rho4)
    return _residual(np.asarray(u, dtype=float), params, rho4, grid, pars, radial_laplacian(grid))


def initial_guess(params: ModelParams, grid: RadialGrid) -> np.ndarray:
    """Constants plus the O(eps) corrections; p* at its interface value."""
    ac = asymptotic_coefficients(params)
    N = grid.N
    eps = grid.eps
    L = np.full(N, ac.L_base + eps * ac.Lstar1)
    H = np.full(N, params.H0 + eps * ac.Hstar1)
    F = np.full(N, max(eps * ac.Fstar1, 0.0))
    p = np.full(N, -1.0 / (1.0 - eps))
    return np.concatenate([L, H, F, p])


def solve_inner(
    params: ModelParams,
    rho4: float,
    grid: RadialGrid,
    *,
    guess=None,
    tol: float = TOL_NEWTON,
    max_iter: int = MAX_NEWTON,
    override: bool = False,
) -> Profiles:
    """Damped Newton for the profiles at fixed ``rho4`` (interface flux not imposed)."""
    require_valid(params, override)
    if rho4 < 0 and not override:
        raise ValueError("negative rho4 requires override=True")
    N = grid.N
    pars = _kernels.pack_rates(params, rho4)
    lap = radial_laplacian(grid)
    u = initial_guess(params, grid) if guess is None else np.array(guess, dtype=float, copy=True)
    history = []
    damping = []
    # the residual floor scales with the O(1) solution level
    tol_eff = tol * max(1.0, float(np.max(np.abs(u))))
    for it in range(max_iter):
        res, J = _residual(u, params, rho4, grid, pars, lap)
        rn = float(np.max(np.abs(res)))
        history.append(rn)
        # rounding floor of evaluating the residual rows at u
        floor = 64.0 * np.finfo(float).eps * float(np.max(np.abs(J) @ np.abs(u)))
        tol_eff = max(tol_eff, floor)
        if not math.isfinite(rn):
            raise NewtonDivergedError("non-finite residual", residual=rn, history=history, damping=damping)
        w = 1.0 / np.max(np.abs(J), axis=1)
        step = linalg.solve(J * w[:, None], -res * w)
        if rn <= tol_eff:
            # one polishing step down to the rounding floor
            trial = u + step
            tn = float(np.max(np.abs(_residual(trial, params, rho4, grid, pars, lap, False)[0])))
            if tn <= rn:
                u, rn = trial, tn
            L, H, F, p = _split(u, N)
            return Profiles(L.copy(), H.copy(), F.copy(), p.copy(), rn, it + 1, tuple(history))
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = u + lam * step
            tn = float(np.max(np.abs(_residual(trial, params, rho4, grid, pars, lap, False)[0])))
            if tn < rn:
                break
            lam *= 0.5
        else:
            raise NewtonDivergedError(
                f"no decrease after {MAX_HALVINGS} halvings (residual {rn:.3e})",
                residual=rn,
                history=history,
                damping=damping,
            )
        damping.append(lam)
        u = trial
    raise MaxIterationsError(f"{max_iter} iterations, residual {history[-1]:.3e}", residual=history[-1], history=history)


def flux_bracket(params: ModelParams, rho4: float, L, H, F) -> np.ndarray:
    """Nodewise ``lambda (M0-F) L/(gamma+H) - rho3 (M0-F) - rho4 F``."""
    M = params.M0 - F
    return params.lambda_ * M * L / (params.gamma + H) - params.rho3 * M - rho4 * F


def phi_from_profiles(params: ModelParams, rho4: float, prof: Profiles, grid: RadialGrid) -> float:
    return grid.integrate(flux_bracket(params, rho4, prof.L, prof.H, prof.F) * grid.nodes)


def phi(params: ModelParams, mu: float, rho4: float, grid: RadialGrid, *, override: bool = False) -> float:
    """Integral interface-flux functional; zero iff ``p*'(1 - eps) = 0``."""
    p = params.with_(mu=mu)
    prof = solve_inner(p, rho4, grid, override=override)
    return phi_from_profiles(p, rho4, prof, grid)


class _PhiEvaluator:
    """Phi(rho4) with Newton warm starts from the latest inner solve."""

    def __init__(self, params, grid, guess, override):
        self.params = params
        self.grid = grid
        self.guess = guess
        self.override = override
        self.calls = 0
        self.cache: dict[float, tuple[float, Profiles]] = {}

    def __call__(self, rho4: float) -> float:
        rho4 = float(rho4)
        if rho4 in self.cache:
            return self.cache[rho4][0]
        prof = solve_inner(self.params, rho4, self.grid, guess=self.guess, override=True)
        self.guess = prof.stacked()
        self.calls += 1
        val = phi_from_profiles(self.params, rho4, prof, self.grid)
        self.cache[rho4] = (val, prof)
        return val


def solve_steady(
    params: ModelParams,
    grid: RadialGrid,
    *,
    guess=None,
    rho4_guess: float | None = None,
    override: bool = False,
) -> SteadyState:
    """Stationary solution with rho4 fixed by ``Phi(rho4) = 0``."""
    require_valid(params, override)
    if abs(grid.eps - params.eps) > 1e-15:
        raise ValueError(f"grid eps {grid.eps} does not match params eps {params.eps}")
    ac = asymptotic_coefficients(params)
    if not ac.rho4_leading > 0 and not override:
        raise MuBelowCriticalError(f"mu={params.mu} <= mu_c={ac.mu_c}", mu=params.mu, mu_c=ac.mu_c)
    ev = _PhiEvaluator(params, grid, guess, override)
    tol = tol_phi(grid.eps)

    lo = 0.0
    f_lo = ev(lo)
    if f_lo <= 0.0 and not override:
        raise MuBelowCriticalError(f"Phi(0)={f_lo:.3e} <= 0, no nonnegative rho4", mu=params.mu, mu_c=ac.mu_c)
    if abs(f_lo) <= tol:
        return _finish(params, grid, 0.0, ev)

    # doubling search from 2 * rho4_leading for the first sign change
    start = rho4_guess if rho4_guess is not None else ac.rho4_leading
    if not (math.isfinite(start) and start > 0):
        start = 1.0
    hi = 2.0 * start if rho4_guess is None else start
    signs = [(lo, f_lo)]
    if rho4_guess is not None:
        # tight bracket around a nearby previous root when one is supplied
        width = max(0.05 * abs(start), 1e-3)
        a, b = max(start - width, 0.0), start + width
        fa, fb = ev(a), ev(b)
        if fa > 0 > fb:
            lo, f_lo, hi = a, fa, b
            signs = []
        else:
            hi = 2.0 * max(ac.rho4_leading, start, 1e-3)
    if signs:
        if f_lo > 0:
            for _ in range(60):
                f_hi = ev(hi)
                signs.append((hi, f_hi))
                if f_hi < 0:
                    break
                lo, f_lo = hi, f_hi
                hi *= 2.0
            else:
                raise MuBelowCriticalError("no sign change of Phi while doubling rho4", mu=params.mu, mu_c=ac.mu_c)
        else:
            # override branch: root at negative rho4
            hi, lo = lo, -max(abs(start), 1.0)
            while ev(lo) <= 0:
                lo *= 2.0
                if lo < -1e12:
                    raise MuBelowCriticalError("no sign change of Phi for negative rho4")

    root = optimize.brentq(ev, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    return _finish(params, grid, root, ev)


def _finish(params, grid, rho4, ev: _PhiEvaluator) -> SteadyState:
    ev(rho4)
    val, prof = ev.cache[float(rho4)]
    tol = tol_phi(grid.eps)
    if abs(val) > tol:
        # Brent stopped on the bracket width; polish with secant steps
        keys = sorted(ev.cache)
        for _ in range(8):
            k = min(keys, key=lambda x: abs(x - rho4) if x != rho4 else math.inf)
            fk = ev.cache[k][0]
            if fk == val:
                break
            rho4 = rho4 - val * (rho4 - k) / (val - fk)
            ev(rho4)
            val, prof = ev.cache[float(rho4)]
            keys = sorted(ev.cache)
            if abs(val) <= tol:
                break
    state = build_state(params, grid, prof, float(rho4), val, ev.calls)
    extra = _extra_sign_changes(ev, float(rho4), tol)
    if extra:
        log.warning("Phi changes sign away from the accepted root at %s; keeping rho4=%.6g", extra, rho4)
        state = replace(state, extra_sign_changes=extra)
    return state


def _extra_sign_changes(ev: _PhiEvaluator, root: float, tol: float) -> tuple:
    """Sign changes among all evaluated Phi values that do not bracket ``root``.

    Values within ``tol`` of zero are root noise, not separate roots.
    """
    pts = sorted((k, v[0]) for k, v in ev.cache.items())
    out = []
    for (a, fa), (b, fb) in zip(pts, pts[1:]):
        if (fa > 0) != (fb > 0) and not (a <= root <= b) and min(abs(fa), abs(fb)) > tol:
            out.append((a, b))
    return tuple(out)


def build_state(params, grid, prof: Profiles, rho4: float, phi_value: float, calls: int = 0) -> SteadyState:
    eps = grid.eps
    D1 = grid.D1
    derivs = [D1 @ (X - X[-1]) for X in (prof.L, prof.H, prof.F, prof.p)]
    deriv_max = float(max(np.max(np.abs(d)) for d in derivs))
    pars = _kernels.pack_rates(params, rho4)
    R = _kernels.reaction_terms(prof.L[:1], prof.H[:1], prof.F[:1], pars)
    p2 = float(-R[3, 0])
    return SteadyState(
        params=params,
        grid=grid,
        Lstar=prof.L,
        Hstar=prof.H,
        Fstar=prof.F,
        pstar=prof.p,
        rho4=rho4,
        residual_norm=prof.residual_norm,
        phi_residual=float(phi_value),
        p2_inner=p2,
        J1=p2 / eps**2,
        deriv_max=deriv_max,
        pprime_inner=float(derivs[3][0]),
        phi_evaluations=calls,
    )


def second_derivatives_at_inner(state: SteadyState, params: ModelParams | None = None):
    """(L*'', H*'', F*'', p*'') at ``r = 1 - eps`` from the equations themselves.

    First derivatives come from the interface closures, second derivatives
    from the PDE right-hand sides; nothing is differenced twice.
    """
    p = state.params if params is None else params
    r0 = state.grid.nodes[0]
    L, H, F = state.Lstar[0], state.Hstar[0], state.Fstar[0]
    pars = _kernels.pack_rates(p, state.rho4)
    R = _kernels.reaction_terms(np.array([L]), np.array([H]), np.array([F]), pars)[:, 0]
    dL = p.beta1 * (L - p.L0)
    dH = p.beta1 * (H - p.H0)
    dF = p.beta2 * F
    dp = state.pprime_inner
    L2 = -R[0] - dL / r0
    H2 = -R[1] - dH / r0
    F2 = -dF / r0 - (dF * dp + R[2]) / p.D
    p2 = -R[3]
    return float(L2), float(H2), float(F2), float(p2)


def state_to_csv(state: SteadyState) -> str:
    d = state.diagnostics()
    lines = [f"# params_hash={d['params_hash']},rho4={d['rho4']!r},J1={d['J1']!r}", "r,Lstar,Hstar,Fstar,pstar"]
    for row in zip(state.r, state.Lstar, state.Hstar, state.Fstar, state.pstar):
        lines.append(",".join(repr(float(x)) for x in row))
    return "\n".join(lines) + "\n"
