"""Radial steady states and symmetry-breaking bifurcation points for a thin-annulus plaque model."""

from __future__ import annotations

__version__ = "0.1.0"

from .bifurcation import BifurcationPoint, find_mu_n, frechet_coeff, separation_table, sweep, transversality
from .discretization import RadialGrid, build_grid
from .kernel import KernelSolution, solve_annulus_mode
from .model import PRESETS, REF_A, REF_B, ModelParams, asymptotic_coefficients, mu_c, validate
from .modes import ModeSolution, solve_mode
from .steady import SteadyState, solve_steady

__all__ = [
    "BifurcationPoint",
    "KernelSolution",
    "ModeSolution",
    "ModelParams",
    "PRESETS",
    "REF_A",
    "REF_B",
    "RadialGrid",
    "SteadyState",
    "__version__",
    "asymptotic_coefficients",
    "build_grid",
    "find_mu_n",
    "frechet_coeff",
    "mu_c",
    "separation_table",
    "solve_annulus_mode",
    "solve_mode",
    "solve_steady",
    "sweep",
    "transversality",
    "validate",
]
