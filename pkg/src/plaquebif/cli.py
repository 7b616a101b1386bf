"""Command-line front end.

Exit codes: 0 success, 1 solver error, 2 configuration error, 3 failed
validation. Parameter precedence: command-line flag > config file (or
``--preset``) > built-in REF-A defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys

from . import __version__, _kernels
from .bifurcation import find_mu_n, separation_table, sweep, tol_g
from .checks import Battery, tolerance_table
from .config import ConfigError, RUN_KEYS, load, params_from_mapping
from .discretization import DEFAULT_N, SCHEMES, build_grid
from .errors import GridError, InvalidParamsError, KernelDegenerateError, SolverError
from .model import PARAM_KEYS, PRESETS, REF_A, ModelParams, asymptotic_coefficients, require_valid
from .modes import mode_to_csv, solve_mode
from .steady import TOL_NEWTON, solve_steady, state_to_csv, tol_phi

log = logging.getLogger("plaquebif")

EXIT_OK, EXIT_SOLVER, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2, 3


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="FILE", help="key = value file giving every model parameter")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in parameter set")
    pg = common.add_argument_group("model parameters (override file/preset)")
    for key in PARAM_KEYS:
        pg.add_argument(f"--{key}", dest=f"p_{key}", type=float, metavar="X")
    common.add_argument("--N", type=int, default=None, help=f"grid nodes (default {DEFAULT_N})")
    common.add_argument("--scheme", choices=SCHEMES, default=None)
    common.add_argument("--out", default=None, help="output directory (default ./out)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--override", action="store_true", help="skip parameter validation")
    common.add_argument("--quiet", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="plaquebif", description="Radial plaque steady states and symmetry-breaking points.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("steady", parents=[common], help="radial steady state")
    m = sub.add_parser("mode", parents=[common], help="linearized mode-n solution")
    m.add_argument("--n", type=int, required=True)
    b = sub.add_parser("bifurcate", parents=[common], help="locate mu_n and the separation table")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--m-max", type=int, default=12)
    s = sub.add_parser("sweep", parents=[common], help="mu_n over (n, eps)")
    s.add_argument("--n-list", type=_csv_ints, default=[2, 3])
    s.add_argument("--eps-list", type=_csv_floats, default=[0.01, 0.005, 0.0025])
    s.add_argument("--jobs", type=int, default=1)
    v = sub.add_parser("validate", parents=[common], help="acceptance battery")
    v.add_argument("--only", type=lambda t: [x.strip().upper() for x in t.split(",")], default=None)
    return ap


def resolve(args) -> tuple[ModelParams, dict, dict]:
    """(params, per-key source, run settings) with flag > file > default precedence."""
    sources = {}
    run = {}
    if args.config:
        mapping = load(args.config)
        values = params_from_mapping(mapping)
        sources = dict.fromkeys(PARAM_KEYS, "file")
        run.update({k: mapping[k] for k in RUN_KEYS if k in mapping})
    elif args.preset:
        values = PRESETS[args.preset].as_config()
        sources = dict.fromkeys(PARAM_KEYS, f"preset:{args.preset}")
    else:
        values = REF_A.as_config()
        sources = dict.fromkeys(PARAM_KEYS, "default:REF-A")
    for key in PARAM_KEYS:
        flag = getattr(args, f"p_{key}")
        if flag is not None:
            values[key] = flag
            sources[key] = "cli"
    params = ModelParams.from_config(values)
    settings = {
        "N": args.N if args.N is not None else int(run.get("N", DEFAULT_N)),
        "scheme": args.scheme or run.get("scheme", "uniform-FD2"),
        "out": args.out or run.get("out", "out"),
        "format": args.format or run.get("format", "csv"),
        "seed": args.seed if args.seed is not None else int(run.get("seed", 0)),
    }
    if settings["scheme"] not in SCHEMES:
        raise ConfigError(f"unknown scheme {settings['scheme']!r}")
    if settings["format"] not in ("csv", "json"):
        raise ConfigError(f"unknown format {settings['format']!r}")
    return params, sources, settings


class _Writer:
    def __init__(self, out: str):
        self.out = out
        self.files: dict[str, str] = {}
        os.makedirs(out, exist_ok=True)

    def text(self, name: str, text: str) -> None:
        data = text.encode("utf-8")
        with open(os.path.join(self.out, name), "wb") as fh:
            fh.write(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def json(self, name: str, obj) -> None:
        self.text(name, json.dumps(obj, indent=2, allow_nan=True) + "\n")


def _manifest(args, params, sources, settings, writer: _Writer, extra: dict) -> dict:
    return {
        "tool": "plaquebif",
        "version": __version__,
        "command": args.command,
        "params": params.as_config(),
        "param_sources": sources,
        "params_hash": params.digest(),
        "L0": params.L0,
        "grid": {"N": settings["N"], "scheme": settings["scheme"]},
        "format": settings["format"],
        "seed": settings["seed"],
        "override": bool(args.override),
        "args": extra,
        "tolerances": {
            "newton": TOL_NEWTON,
            "phi": tol_phi(params.eps),
            "g": tol_g(params.eps),
        },
        "kernel_backend": _kernels.BACKEND,
        "outputs": dict(sorted(writer.files.items())),
    }


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _cmd_steady(args, params, settings, w: _Writer) -> dict:
    grid = build_grid(params.eps, settings["N"], settings["scheme"])
    st = solve_steady(params, grid, override=args.override)
    w.text("steady.csv", state_to_csv(st))
    diag = st.diagnostics()
    diag["asymptotic"] = asymptotic_coefficients(params).as_dict()
    w.json("steady_diagnostics.json", diag)
    _say(args, f"rho4={st.rho4!r} J1={st.J1!r} phi={st.phi_residual:.3e}")
    return {}


def _cmd_mode(args, params, settings, w: _Writer) -> dict:
    grid = build_grid(params.eps, settings["N"], settings["scheme"])
    st = solve_steady(params, grid, override=args.override)
    ms = solve_mode(st, params, args.n)
    w.text(f"mode_n{args.n}.csv", mode_to_csv(ms))
    w.json(
        f"mode_n{args.n}.json",
        {
            "n": ms.n,
            "J2n": ms.J2n,
            "p1n_prime_inner": ms.p1n_prime_inner,
            "bdata_L": ms.bdata_L,
            "bdata_H": ms.bdata_H,
            "bdata_F": ms.bdata_F,
            "G": ms.G,
            "rcond": ms.rcond,
            "rho4": st.rho4,
            "J1": st.J1,
        },
    )
    _say(args, f"n={ms.n} p1n'={ms.p1n_prime_inner!r} J2n={ms.J2n!r}")
    return {"n": args.n}


def _cmd_bifurcate(args, params, settings, w: _Writer) -> dict:
    grid = build_grid(params.eps, settings["N"], settings["scheme"])
    pt = find_mu_n(params, args.n, grid, override=args.override)
    tab = separation_table(params, pt, args.m_max, grid, strict=False)
    doc = pt.as_dict()
    doc["separation"] = tab.as_dict()
    w.json(f"bifurcation_n{args.n}.json", doc)
    lines = ["m,W"] + [f"{m},{wv!r}" for m, wv in tab.rows]
    w.text(f"separation_n{args.n}.csv", "\n".join(lines) + "\n")
    _say(args, f"n={pt.n} mu_n={pt.mu_n!r} asymptotic={pt.mu_asymptotic!r} valid={pt.valid}")
    bad = [m for m, wv in tab.rows if m != pt.n and abs(wv) <= tab.threshold]
    if bad:
        raise KernelDegenerateError(f"|W(m)| <= {tab.threshold:.3e} for m={bad}", modes=bad)
    return {"n": args.n, "m_max": args.m_max}


def _cmd_sweep(args, params, settings, w: _Writer) -> dict:
    res = sweep(params, args.n_list, args.eps_list, (settings["N"], settings["scheme"]), jobs=max(1, args.jobs))
    if settings["format"] == "json":
        w.text("sweep.json", res.to_json())
    else:
        w.text("sweep.csv", res.to_csv())
    failed = sum(1 for r in res.rows if r["error"])
    _say(args, f"{len(res.rows)} rows, {failed} failed")
    # jobs does not change the output, so it stays out of the manifest
    return {"n_list": list(args.n_list), "eps_list": list(args.eps_list)}


def _cmd_validate(args, params, settings, w: _Writer, explicit: bool) -> tuple[dict, bool]:
    kwargs = {"N": settings["N"], "scheme": settings["scheme"], "seed": settings["seed"]}
    if explicit:
        kwargs["ref_b"] = params
    results = Battery(**kwargs).run(args.only)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    w.json(
        "validate.json",
        {
            "passed": ok,
            "checks": [{"key": r.key, "title": r.title, "passed": r.passed, "detail": r.detail} for r in results],
            "tolerances": tolerance_table(),
        },
    )
    return {"only": args.only}, ok


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        print(f"plaquebif: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        params, sources, settings = resolve(args)
        if args.command != "validate":
            require_valid(params, args.override)
            build_grid(params.eps, settings["N"], settings["scheme"])
    except (ConfigError, InvalidParamsError, GridError, KeyError, ValueError) as exc:
        print(f"plaquebif: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    w = _Writer(settings["out"])
    status = EXIT_OK
    try:
        if args.command == "steady":
            extra = _cmd_steady(args, params, settings, w)
        elif args.command == "mode":
            extra = _cmd_mode(args, params, settings, w)
        elif args.command == "bifurcate":
            extra = _cmd_bifurcate(args, params, settings, w)
        elif args.command == "sweep":
            extra = _cmd_sweep(args, params, settings, w)
        else:
            explicit = bool(args.config or args.preset or any(s == "cli" for s in sources.values()))
            extra, ok = _cmd_validate(args, params, settings, w, explicit)
            status = EXIT_OK if ok else EXIT_VALIDATION
    except SolverError as exc:
        print(f"plaquebif: solver error: {exc}", file=sys.stderr)
        extra, status = {"error": getattr(exc, "code", "solver-error")}, EXIT_SOLVER
    except (ValueError, GridError) as exc:
        print(f"plaquebif: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    w.json("run.manifest.json", _manifest(args, params, sources, settings, w, extra))
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
