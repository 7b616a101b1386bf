"""Time the numba kernels against their numpy twins.

Usage: python3 benchmarks/bench_kernels.py [--sizes 64,1024,65536] [--repeat 50]

The end-to-end row solves the REF-B steady state in a fresh interpreter with
and without PLAQUEBIF_DISABLE_NUMBA so that each backend is measured the way
users run it.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from plaquebif import _kernels
from plaquebif._accel import HAVE_NUMBA
from plaquebif.model import REF_B

E2E = """
import time
from plaquebif.discretization import build_grid
from plaquebif.model import REF_B
from plaquebif.steady import solve_steady
from plaquebif import _kernels
solve_steady(REF_B, build_grid(0.01, 32))
t = time.perf_counter()
for _ in range({reps}):
    solve_steady(REF_B, build_grid(0.01, {N}))
print(_kernels.BACKEND, (time.perf_counter() - t) / {reps})
"""


def best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(sizes, repeat):
    rng = np.random.default_rng(0)
    pars = _kernels.pack_rates(REF_B, 3.4)
    for n in sizes:
        L, H, F = rng.uniform(0.1, 1.0, (3, n))
        y = rng.standard_normal(n)
        cases = (
            ("reaction_terms", _kernels.reaction_terms_numpy, _kernels.reaction_terms_numba, (L, H, F, pars)),
            ("reaction_jacobian", _kernels.reaction_jacobian_numpy, _kernels.reaction_jacobian_numba, (L, H, F, pars)),
            ("cumulative_cubic", _kernels.cumulative_cubic_numpy, _kernels.cumulative_cubic_numba, (y, 1.0 / n)),
        )
        for name, f_np, f_nb, args in cases:
            f_nb(*args)  # compile outside the timing
            assert np.allclose(f_np(*args), f_nb(*args), rtol=1e-12, atol=1e-12)
            t_np = best(lambda: f_np(*args), repeat)
            t_nb = best(lambda: f_nb(*args), repeat)
            yield name, n, t_np, t_nb


def e2e(N: int, reps: int, disable: bool) -> tuple[str, float]:
    env = dict(os.environ)
    if disable:
        env["PLAQUEBIF_DISABLE_NUMBA"] = "1"
    else:
        env.pop("PLAQUEBIF_DISABLE_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", E2E.format(N=N, reps=reps)], env=env, capture_output=True, text=True, check=True
    )
    backend, secs = out.stdout.split()
    return backend, float(secs)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,1024,65536")
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--N", type=int, default=64, help="grid size for the end-to-end solve")
    ap.add_argument("--e2e-reps", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba not available; nothing to compare")
        return 1
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"{'kernel':<18} {'n':>7} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for name, n, t_np, t_nb in kernel_rows(sizes, args.repeat):
        print(f"{name:<18} {n:>7} {t_np * 1e6:>10.1f} {t_nb * 1e6:>10.1f} {t_np / t_nb:>8.2f}")
    b_np, s_np = e2e(args.N, args.e2e_reps, True)
    b_nb, s_nb = e2e(args.N, args.e2e_reps, False)
    print(f"\nsolve_steady REF-B N={args.N}: {b_np} {s_np * 1e3:.1f} ms, {b_nb} {s_nb * 1e3:.1f} ms, speedup {s_np / s_nb:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
