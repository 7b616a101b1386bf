"""Symmetry-breaking points of the stationary plaque.

The normal-velocity response of mode n at parameter mu is

    g(n, mu) = p*''(1 - eps) + (p1^n)'(1 - eps)

and mu_n is the root of g in mu. Every evaluation re-solves the steady
state (including rho4) and the mode system; only Newton initial guesses
are carried between evaluations.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from scipy import optimize

from .discretization import DEFAULT_N, build_grid, RadialGrid
from .errors import (
    AsymptoticGuessBelowCriticalError,
    KernelDegenerateError,
    MuBelowCriticalError,
    NoSignChangeError,
    NonMonotoneError,
    SolverError,
)
from .kernel import annulus_factor
from .model import ModelParams, mu_asymptotic, mu_c, require_valid
from .modes import solve_mode
from .steady import SteadyState, solve_steady

log = logging.getLogger(__name__)

MAX_BRACKET_STEPS = 40

SWEEP_COLUMNS = (
    "n",
    "eps",
    "mu_n",
    "mu_asymptotic",
    "deviation",
    "deviation_scaled",
    "J1",
    "J2n",
    "transversality_norm",
    "rho4",
    "valid",
    "error",
)


def tol_g(eps: float) -> float:
    return 1e-12 + 1e-8 * eps


@dataclass(frozen=True)
class FrechetValue:
    n: int
    mu: float
    g: float
    p2_inner: float
    p1n_prime_inner: float
    J1: float
    J2n: float
    rho4: float

    def decomposition(self, params: ModelParams, eps: float) -> float:
        """``eps mu/(gamma+H0) + annulus factor + eps^2 (J1 + J2n)``."""
        return eps * self.mu / (params.gamma + params.H0) + annulus_factor(self.n, eps) + eps**2 * (self.J1 + self.J2n)


class _Evaluator:
    """g(n, mu) with warm starts carried from the nearest earlier solve."""

    def __init__(self, params: ModelParams, grid: RadialGrid, override: bool = False):
        self.params = params
        self.grid = grid
        self.override = override
        self.states: dict[float, SteadyState] = {}

    def steady(self, mu: float) -> SteadyState:
        mu = float(mu)
        if mu in self.states:
            return self.states[mu]
        p = self.params.with_(mu=mu)
        guess = rho4 = None
        if self.states:
            near = min(self.states, key=lambda m: abs(m - mu))
            st = self.states[near]
            guess = st.profiles().stacked()
            # shift the L level to the new L0 so the guess stays close
            N = self.grid.N
            guess[:N] += p.L0 - st.params.L0
            rho4 = st.rho4 if abs(near - mu) < 0.25 * (abs(mu) + 1.0) else None
        st = solve_steady(p, self.grid, guess=guess, rho4_guess=rho4, override=self.override)
        self.states[mu] = st
        return st

    def value(self, mu: float, n: int) -> FrechetValue:
        st = self.steady(mu)
        ms = solve_mode(st, st.params, n)
        return FrechetValue(
            n=n,
            mu=float(mu),
            g=st.p2_inner + ms.p1n_prime_inner,
            p2_inner=st.p2_inner,
            p1n_prime_inner=ms.p1n_prime_inner,
            J1=st.J1,
            J2n=ms.J2n,
            rho4=st.rho4,
        )


def frechet_coeff(params: ModelParams, mu: float, n: int, grid: RadialGrid, *, override: bool = False) -> float:
    return frechet_value(params, mu, n, grid, override=override).g


def frechet_value(params: ModelParams, mu: float, n: int, grid: RadialGrid, *, override: bool = False) -> FrechetValue:
    require_valid(params.with_(mu=mu), override)
    return _Evaluator(params, grid, override).value(mu, n)


@dataclass(frozen=True)
class BifurcationPoint:
    n: int
    eps: float
    mu_n: float
    mu_asymptotic: float
    deviation: float
    valid: bool
    rho4_at_mu_n: float
    g_at_mu_n: float
    g_bracket: tuple
    dg_dmu: float
    transversality_norm: float
    J1: float
    J2n: float
    scan: tuple = field(default=(), repr=False)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "eps": self.eps,
            "mu_n": self.mu_n,
            "mu_asymptotic": self.mu_asymptotic,
            "deviation": self.deviation,
            "deviation_scaled": self.deviation / (self.n**5 * self.eps),
            "valid": self.valid,
            "rho4_at_mu_n": self.rho4_at_mu_n,
            "g_at_mu_n": self.g_at_mu_n,
            "g_bracket": [list(pair) for pair in self.g_bracket],
            "dg_dmu": self.dg_dmu,
            "transversality_norm": self.transversality_norm,
            "J1": self.J1,
            "J2n": self.J2n,
        }


def _bracket(ev: _Evaluator, n: int, mu0: float, step: float, mc: float):
    scan = []
    f0 = ev.value(mu0, n).g
    scan.append((mu0, f0))
    if f0 == 0.0:
        return (mu0, f0), (mu0, f0), scan
    direction = -1.0 if f0 > 0 else 1.0
    a, fa = mu0, f0
    for _ in range(MAX_BRACKET_STEPS):
        b = a + direction * step
        if b <= mc and not ev.override:
            # approach mu_c geometrically instead of stepping past it
            b = 0.5 * (a + mc)
        if a - b < 1e-9 * (abs(mc) + 1.0) and direction < 0 and not ev.override:
            raise MuBelowCriticalError(
                f"bracket scan for n={n} reached mu={b:.6g} <= mu_c={mc:.6g}",
                scanned=scan,
                mu_c=mc,
            )
        fb = ev.value(b, n).g
        scan.append((b, fb))
        # g is increasing in mu; moving downhill it must drop, uphill rise
        if direction * (fb - fa) <= 0:
            raise NonMonotoneError(f"g not monotone in mu near {b:.6g} for n={n}", scanned=scan)
        if (fa > 0) != (fb > 0):
            lo, hi = ((b, fb), (a, fa)) if b < a else ((a, fa), (b, fb))
            return lo, hi, scan
        a, fa = b, fb
        step *= 2.0
    raise NoSignChangeError(f"no sign change of g for n={n} after {MAX_BRACKET_STEPS} steps", scanned=scan)


def find_mu_n(
    params: ModelParams,
    n: int,
    grid: RadialGrid,
    *,
    with_transversality: bool = True,
    override: bool = False,
    evaluator: _Evaluator | None = None,
) -> BifurcationPoint:
    if int(n) != n or n < 2:
        raise ValueError(f"bifurcation modes start at n=2, got {n!r}")
    n = int(n)
    require_valid(params, override)
    eps = grid.eps
    mc = mu_c(params)
    guess = mu_asymptotic(params, n)
    if not guess > mc and not override:
        raise AsymptoticGuessBelowCriticalError(
            f"mu_guess={guess:.6g} <= mu_c={mc:.6g} for n={n}", mu_guess=guess, mu_c=mc
        )
    ev = evaluator or _Evaluator(params, grid, override)
    gH = params.gamma + params.H0
    step = gH * max(1.0, n**5 * eps)
    # keep the first probe inside the admissible region
    if guess - step <= mc:
        step = 0.5 * (guess - mc)
    lo, hi, scan = _bracket(ev, n, guess, step, mc)
    tol = tol_g(eps)
    if lo[0] == hi[0]:
        root = lo[0]
    else:
        slope = (hi[1] - lo[1]) / (hi[0] - lo[0])
        xtol = max(0.05 * tol / slope, 4e-16 * abs(lo[0]))
        root = optimize.brentq(lambda m: ev.value(m, n).g, lo[0], hi[0], xtol=xtol, rtol=1e-15, maxiter=200)
    fv = ev.value(root, n)
    if abs(fv.g) > tol:
        log.warning("n=%d: |g(mu_n)|=%.3e above tol_g=%.3e", n, abs(fv.g), tol)
    dg = transversality(params, root, n, grid, evaluator=ev, override=override) if with_transversality else math.nan
    return BifurcationPoint(
        n=n,
        eps=eps,
        mu_n=float(root),
        mu_asymptotic=guess,
        deviation=abs(root - guess),
        valid=bool(root > mc),
        rho4_at_mu_n=fv.rho4,
        g_at_mu_n=fv.g,
        g_bracket=(lo, hi),
        dg_dmu=dg,
        transversality_norm=dg * gH / eps,
        J1=fv.J1,
        J2n=fv.J2n,
        scan=tuple(scan),
    )


def transversality_step(mu: float) -> float:
    return max(1e-4 * abs(mu), 1e-4)


def transversality(
    params: ModelParams,
    mu: float,
    n: int,
    grid: RadialGrid,
    *,
    evaluator: _Evaluator | None = None,
    override: bool = False,
) -> float:
    """Central difference of g in mu."""
    ev = evaluator or _Evaluator(params, grid, override)
    d = transversality_step(mu)
    mc = mu_c(params)
    if mu - d <= mc and not override:
        raise MuBelowCriticalError(f"mu - delta = {mu - d:.6g} <= mu_c = {mc:.6g}", mu=mu, mu_c=mc)
    return (ev.value(mu + d, n).g - ev.value(mu - d, n).g) / (2.0 * d)


@dataclass(frozen=True)
class SeparationTable:
    n: int
    mu_n: float
    threshold: float
    rows: tuple  # (m, W(m))

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "mu_n": self.mu_n,
            "threshold": self.threshold,
            "W": [{"m": m, "W": w} for m, w in self.rows],
        }


def separation_table(
    params: ModelParams,
    point: BifurcationPoint,
    m_max: int,
    grid: RadialGrid,
    *,
    strict: bool = True,
    state: SteadyState | None = None,
) -> SeparationTable:
    """W(m) = g(m, mu_n) for m = 0..m_max, reusing one steady state at mu_n."""
    st = state or solve_steady(params.with_(mu=point.mu_n), grid)
    thr = 10.0 * tol_g(grid.eps)
    rows = []
    for m in range(m_max + 1):
        w = st.p2_inner + solve_mode(st, st.params, m).p1n_prime_inner
        rows.append((m, float(w)))
    table = SeparationTable(n=point.n, mu_n=point.mu_n, threshold=thr, rows=tuple(rows))
    if strict:
        bad = [m for m, w in rows if m != point.n and abs(w) <= thr]
        if bad:
            raise KernelDegenerateError(f"|W(m)| <= {thr:.3e} for m={bad}", modes=bad, table=table.as_dict())
    return table


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    rows: tuple

    def to_csv(self) -> str:
        lines = [",".join(SWEEP_COLUMNS)]
        for row in self.rows:
            lines.append(",".join(_fmt(row[k]) for k in SWEEP_COLUMNS))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps([{k: row[k] for k in SWEEP_COLUMNS} for row in self.rows], indent=2) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _sweep_row(args) -> dict:
    params, n, eps, N, scheme = args
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(n=int(n), eps=float(eps), mu_asymptotic=mu_asymptotic(params, n), valid=False, error="")
    try:
        p = params.with_(eps=eps)
        pt = find_mu_n(p, n, build_grid(eps, N, scheme))
    except SolverError as exc:
        row["error"] = exc.code
        return row
    row.update(
        mu_n=pt.mu_n,
        deviation=pt.deviation,
        deviation_scaled=pt.deviation / (n**5 * eps),
        J1=pt.J1,
        J2n=pt.J2n,
        transversality_norm=pt.transversality_norm,
        rho4=pt.rho4_at_mu_n,
        valid=pt.valid,
    )
    return row


def sweep(params_template: ModelParams, n_list, eps_list, grid_spec=(DEFAULT_N, "uniform-FD2"), jobs: int = 1) -> SweepResult:
    """One row per (n, eps), n-major; a failing row keeps its error code."""
    N, scheme = grid_spec
    tasks = [(params_template, int(n), float(e), int(N), scheme) for n in n_list for e in eps_list]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    return SweepResult(rows=tuple(rows))
