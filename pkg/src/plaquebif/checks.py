"""Acceptance battery shared by ``plaquebif validate`` and the test suite.

Every tolerance is a module constant so that the pass/fail thresholds are
fixed in one place. "Bounded across the sweep" is made concrete as: the
quantity at every finer eps is at most ``GROWTH_LIMIT`` times its value at
the coarsest eps.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bifurcation import _Evaluator, find_mu_n, separation_table, tol_g
from .discretization import build_grid, richardson_error
from .kernel import k_apply, k_bounds
from .model import REF_A, REF_B, ModelParams, asymptotic_coefficients, mu_asymptotic, mu_c
from .modes import mode_via_kernel, solve_mode
from .steady import SteadyState, solve_steady, steady_residual

EPS_SWEEP = (0.01, 0.005, 0.0025)
GROWTH_LIMIT = 1.25
MIN_ORDER = 1.7
HALVING_RATIO = (1.5, 2.6)
JAC_RTOL = 1e-6
CROSS_FLOOR = 1e-8
# safety factor of the two-grid convergence index on the direct solve
GCI_SAFETY = 3.0
N_RANDOM_F = 120
KERNEL_MODES = (1, 64)
SHARP_MODES = tuple(range(6))
BIF_MODES = (2, 3)
SEP_M_MAX = 12
RHO4_SAMPLES = (0.1, 0.3, 0.55, 0.8, 1.0)
BOX_SLACK = 1e-12


@dataclass(frozen=True)
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict, compare=False)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.key} {self.title}: {self.detail}"


def bounded(values) -> bool:
    """Growth rule: no finer-eps value exceeds GROWTH_LIMIT x the coarsest one."""
    vals = [abs(v) for v in values]
    if not vals or not all(math.isfinite(v) for v in vals):
        return False
    return max(vals[1:], default=0.0) <= GROWTH_LIMIT * vals[0]


def observed_orders(values) -> list[float]:
    """log2 of successive ratios for a sequence at eps, eps/2, eps/4."""
    return [math.log2(abs(a) / abs(b)) for a, b in zip(values, values[1:])]


def _fmt(xs) -> str:
    return "[" + ", ".join(f"{x:.4g}" for x in xs) + "]"


class Battery:
    """Lazily computed, cached solves for the acceptance criteria."""

    def __init__(
        self,
        N: int = 64,
        scheme: str = "uniform-FD2",
        ref_a: ModelParams = REF_A,
        ref_b: ModelParams = REF_B,
        seed: int = 0,
        eps_list=EPS_SWEEP,
    ):
        self.N = N
        self.scheme = scheme
        self.ref_a = ref_a
        self.ref_b = ref_b
        self.seed = seed
        self.eps_list = tuple(eps_list)
        self._steady: dict = {}
        self._points: dict = {}
        self._evaluators: dict = {}

    def grid(self, eps):
        return build_grid(eps, self.N, self.scheme)

    def steady(self, which: str, eps: float, mu: float | None = None) -> SteadyState:
        base = self.ref_a if which == "A" else self.ref_b
        p = base.with_(eps=eps) if mu is None else base.with_(eps=eps, mu=mu)
        key = (which, eps, p.mu)
        if key not in self._steady:
            self._steady[key] = solve_steady(p, self.grid(eps))
        return self._steady[key]

    def point(self, n: int, eps: float):
        key = (n, eps)
        if key not in self._points:
            p = self.ref_b.with_(eps=eps)
            ev = _Evaluator(p, self.grid(eps))
            self._evaluators[key] = ev
            self._points[key] = find_mu_n(p, n, self.grid(eps), evaluator=ev)
        return self._points[key]

    def all_states(self):
        out = list(self._steady.values())
        for ev in self._evaluators.values():
            out.extend(ev.states.values())
        return out

    # ------------------------------------------------------------------

    def c1_bifurcation_asymptotics(self) -> CheckResult:
        ok = True
        parts = []
        vals = {}
        for n in BIF_MODES:
            pts = [self.point(n, e) for e in self.eps_list]
            scaled = [pt.deviation / (n**5 * pt.eps) for pt in pts]
            ratios = [a.deviation / b.deviation for a, b in zip(pts, pts[1:])]
            good = (
                bounded(scaled)
                and all(HALVING_RATIO[0] <= r <= HALVING_RATIO[1] for r in ratios)
                and all(pt.valid for pt in pts)
            )
            ok &= good
            parts.append(f"n={n} dev/(n^5 eps)={_fmt(scaled)} halving={_fmt(ratios)}")
            vals[n] = {"mu_n": [pt.mu_n for pt in pts], "scaled": scaled, "ratios": ratios}
        return CheckResult("C1", "bifurcation asymptotics", ok, "; ".join(parts), vals)

    def c2_steady_expansions(self) -> CheckResult:
        devs = []
        for e in self.eps_list:
            s = self.steady("A", e)
            ac = asymptotic_coefficients(s.params)
            d = max(
                np.max(np.abs(s.Lstar - (ac.L_base + e * ac.Lstar1))),
                np.max(np.abs(s.Hstar - (s.params.H0 + e * ac.Hstar1))),
                np.max(np.abs(s.Fstar - e * ac.Fstar1)),
            )
            devs.append(float(d))
        C = [d / e**2 for d, e in zip(devs, self.eps_list)]
        orders = observed_orders(devs)
        ok = bounded(C) and all(o >= MIN_ORDER for o in orders)
        return CheckResult(
            "C2", "steady expansions", ok, f"dev/eps^2={_fmt(C)} orders={_fmt(orders)}", {"dev": devs, "orders": orders}
        )

    def c3_rho4_law(self) -> CheckResult:
        C = []
        for e in self.eps_list:
            s = self.steady("B", e)
            lead = asymptotic_coefficients(s.params).rho4_leading
            C.append(abs(s.rho4 - lead) / e)
        e0 = self.eps_list[0]
        mc = mu_c(self.ref_b)
        top = mu_asymptotic(self.ref_b, 2)
        mus = [mc + f * (top - mc) for f in RHO4_SAMPLES]
        rho = [self.steady("B", e0, mu).rho4 for mu in mus]
        inc = all(b > a for a, b in zip(rho, rho[1:]))
        ok = bounded(C) and inc
        return CheckResult(
            "C3", "rho4 law", ok, f"|rho4-lead|/eps={_fmt(C)} rho4(mu)={_fmt(rho)} increasing={inc}", {"C": C, "rho4": rho}
        )

    def c4_j1_bounded(self) -> CheckResult:
        ok = True
        parts = []
        for which in ("A", "B"):
            J1 = [self.steady(which, e).J1 for e in self.eps_list]
            p2 = [self.steady(which, e).p2_inner for e in self.eps_list]
            orders = observed_orders(p2)
            ok &= bounded(J1) and all(o >= MIN_ORDER for o in orders)
            parts.append(f"REF-{which} J1={_fmt(J1)} p2 orders={_fmt(orders)}")
        return CheckResult("C4", "J1 boundedness", ok, "; ".join(parts))

    def c5_sharp_mode(self) -> CheckResult:
        C = []
        for e in self.eps_list:
            s = self.steady("B", e)
            C.append(max(abs(solve_mode(s, s.params, n).J2n) / (n * n + 1) for n in SHARP_MODES))
        ok = bounded(C)
        return CheckResult("C5", "sharp mode estimate", ok, f"max_n residual/((n^2+1) eps^2)={_fmt(C)}", {"C": C})

    def c6_kernel_cross(self) -> CheckResult:
        worst = -math.inf
        ok = True
        for e in self.eps_list:
            s = self.steady("B", e)
            fine_grid = self.grid(e).refined()
            sf = solve_steady(s.params, fine_grid)
            for n in SHARP_MODES:
                m = solve_mode(s, s.params, n)
                mf = solve_mode(sf, sf.params, n)
                diff = float(np.max(np.abs(m.p1n - mode_via_kernel(s, s.params, n, m))))
                tol = max(CROSS_FLOOR, GCI_SAFETY * richardson_error(m.p1n, mf.p1n, self.grid(e).order))
                worst = max(worst, diff / tol)
                ok &= diff <= tol
        return CheckResult("C6", "kernel cross-validation", ok, f"max diff/tol={worst:.3g}", {"worst": worst})

    def c7_kernel_bounds(self) -> CheckResult:
        rng = np.random.default_rng(self.seed)
        min_slack = math.inf
        count = 0
        for _ in range(N_RANDOM_F):
            e = float(rng.choice(self.eps_list))
            g = self.grid(e)
            n = int(rng.integers(KERNEL_MODES[0], KERNEL_MODES[1] + 1))
            f = random_smooth(rng, g.nodes)
            K, Kp = k_apply(n, f, g)
            bK, bKp = k_bounds(n, e)
            fmax = float(np.max(np.abs(f)))
            slack = min(bK * fmax - float(np.max(np.abs(K))), bKp * fmax - float(np.max(np.abs(Kp))))
            min_slack = min(min_slack, slack)
            count += 1
        ok = count >= 100 and min_slack >= 0.0
        return CheckResult("C7", "kernel bound certificates", ok, f"{count} samples, min slack={min_slack:.3e}")

    def c8_jacobian_oracle(self) -> CheckResult:
        worst_point = 0.0
        worst_block = 0.0
        for which in ("A", "B"):
            s = self.steady(which, self.eps_list[0])
            worst_point = max(worst_point, max(reaction_jacobian_error(s).values()))
            worst_block = max(worst_block, discrete_jacobian_error(s))
        ok = worst_point <= JAC_RTOL and worst_block <= JAC_RTOL
        return CheckResult(
            "C8",
            "Jacobian oracle gate",
            ok,
            f"nodewise rel={worst_point:.2e} block rel={worst_block:.2e} (tol {JAC_RTOL:g})",
        )

    def c9_transversality(self) -> CheckResult:
        ok = True
        parts = []
        for n in BIF_MODES:
            pts = [self.point(n, e) for e in self.eps_list]
            norms = [pt.transversality_norm for pt in pts]
            C = [abs(t - 1.0) / (pt.eps * (n * n + 1)) for t, pt in zip(norms, pts)]
            ok &= all(pt.dg_dmu > 0 for pt in pts) and bounded(C)
            parts.append(f"n={n} norm={_fmt(norms)} C={_fmt(C)}")
        return CheckResult("C9", "transversality", ok, "; ".join(parts))

    def c10_separation(self) -> CheckResult:
        e = self.eps_list[0]
        pt = self.point(2, e)
        st = self._evaluators[(2, e)].steady(pt.mu_n)
        tab = separation_table(self.ref_b.with_(eps=e), pt, SEP_M_MAX, self.grid(e), strict=False, state=st)
        thr = tab.threshold
        others = [abs(w) for m, w in tab.rows if m != 2]
        w2 = dict(tab.rows)[2]
        ok = min(others) >= thr and abs(w2) <= thr
        return CheckResult("C10", "mode separation", ok, f"min|W(m!=2)|={min(others):.3e} |W(2)|={abs(w2):.3e} thr={thr:.3e}")

    def c11_box_bounds(self) -> CheckResult:
        states = self.all_states()
        bad = [s for s in states if not box_ok(s)]
        return CheckResult("C11", "maximum-principle box bounds", not bad, f"{len(states) - len(bad)}/{len(states)} states")

    def c12_determinism(self) -> CheckResult:
        from .cli import main

        outs = []
        with tempfile.TemporaryDirectory() as tmp:
            for tag in ("a", "b"):
                d = os.path.join(tmp, tag)
                argv = [
                    "sweep",
                    "--preset",
                    "REF-B",
                    "--n-list",
                    "2",
                    "--eps-list",
                    "0.01",
                    "--N",
                    str(self.N),
                    "--scheme",
                    self.scheme,
                    "--out",
                    d,
                    "--quiet",
                ]
                code = main(argv)
                files = {}
                for name in sorted(os.listdir(d)):
                    with open(os.path.join(d, name), "rb") as fh:
                        files[name] = fh.read()
                outs.append((code, files))
        ok = outs[0][0] == 0 and outs[0] == outs[1]
        return CheckResult("C12", "determinism", ok, f"{len(outs[0][1])} files byte-identical={outs[0] == outs[1]}")

    def run(self, keys=None) -> list[CheckResult]:
        checks = [
            self.c1_bifurcation_asymptotics,
            self.c2_steady_expansions,
            self.c3_rho4_law,
            self.c4_j1_bounded,
            self.c5_sharp_mode,
            self.c6_kernel_cross,
            self.c7_kernel_bounds,
            self.c8_jacobian_oracle,
            self.c9_transversality,
            self.c10_separation,
            self.c11_box_bounds,
            self.c12_determinism,
        ]
        out = []
        for fn in checks:
            key = "C" + fn.__name__.split("_")[0][1:]
            if keys and key not in keys:
                continue
            try:
                out.append(fn())
            except Exception as exc:  # a crash is a failed criterion, not an abort
                out.append(CheckResult(key, TITLES[key], False, f"raised {type(exc).__name__}: {exc}"))
        return out


TITLES = {
    "C1": "bifurcation asymptotics",
    "C2": "steady expansions",
    "C3": "rho4 law",
    "C4": "J1 boundedness",
    "C5": "sharp mode estimate",
    "C6": "kernel cross-validation",
    "C7": "kernel bound certificates",
    "C8": "Jacobian oracle gate",
    "C9": "transversality",
    "C10": "mode separation",
    "C11": "maximum-principle box bounds",
    "C12": "determinism",
}


# --------------------------------------------------------------------------
# helpers used by the battery and the tests
# --------------------------------------------------------------------------


def random_smooth(rng, r) -> np.ndarray:
    """Random low-order trigonometric-plus-polynomial sample in the stretched coordinate."""
    s = (r - r[0]) / (r[-1] - r[0])
    k = rng.integers(0, 6, size=3)
    a = rng.normal(size=6)
    return (
        a[0]
        + a[1] * s
        + a[2] * s * s
        + a[3] * np.cos(np.pi * k[0] * s)
        + a[4] * np.sin(np.pi * k[1] * s + a[5])
        + 0.1 * np.cos(np.pi * k[2] * s) ** 2
    )


def box_ok(s: SteadyState, slack: float = BOX_SLACK) -> bool:
    p = s.params
    L0 = p.L0
    return bool(
        np.all(s.Lstar >= -slack * L0)
        and np.all(s.Lstar <= L0 * (1 + slack))
        and np.all(s.Hstar >= -slack * p.H0)
        and np.all(s.Hstar <= p.H0 * (1 + slack))
        and np.all(s.Fstar >= -slack * p.M0)
        and np.all(s.Fstar <= p.M0 * (1 + slack))
    )


def reaction_jacobian_error(s: SteadyState) -> dict[str, float]:
    """Relative max-norm gap between the analytic reaction partials and central differences.

    Keys are the equation names; the F entry is the linearization that the
    mode system relies on most.
    """
    pars = _kernels.pack_rates(s.params, s.rho4)
    U = [s.Lstar, s.Hstar, s.Fstar]
    jac = np.asarray(_kernels.reaction_jacobian_numpy(*U, pars))
    fd = np.zeros_like(jac)
    for v in range(3):
        h = 1e-6 * np.maximum(1.0, np.abs(U[v]))
        up = [u.copy() for u in U]
        dn = [u.copy() for u in U]
        up[v] += h
        dn[v] -= h
        fd[:, v] = (_kernels.reaction_terms_numpy(*up, pars) - _kernels.reaction_terms_numpy(*dn, pars)) / (2 * h)
    out = {}
    for e, name in enumerate(("L", "H", "F", "p")):
        scale = max(np.max(np.abs(jac[e])), np.finfo(float).tiny)
        out[name] = float(np.max(np.abs(jac[e] - fd[e])) / scale)
    return out


def discrete_jacobian_error(s: SteadyState) -> float:
    """Relative gap between the assembled Newton Jacobian and a central-difference one."""
    u = s.profiles().stacked()
    _, J = steady_residual(u, s.params, s.rho4, s.grid)
    fd = np.zeros_like(J)
    for j in range(u.size):
        h = 1e-6 * max(1.0, abs(u[j]))
        up = u.copy()
        dn = u.copy()
        up[j] += h
        dn[j] -= h
        fd[:, j] = (steady_residual(up, s.params, s.rho4, s.grid)[0] - steady_residual(dn, s.params, s.rho4, s.grid)[0]) / (
            2 * h
        )
    return float(np.max(np.abs(J - fd)) / np.max(np.abs(J)))


def tolerance_table() -> dict:
    return {
        "eps_sweep": list(EPS_SWEEP),
        "growth_limit": GROWTH_LIMIT,
        "min_order": MIN_ORDER,
        "halving_ratio": list(HALVING_RATIO),
        "jacobian_rtol": JAC_RTOL,
        "cross_floor": CROSS_FLOOR,
        "gci_safety": GCI_SAFETY,
        "random_f_samples": N_RANDOM_F,
        "separation_m_max": SEP_M_MAX,
        "box_slack": BOX_SLACK,
        "tol_g_at_0.01": tol_g(0.01),
    }
