"""Exception types. Each carries a short machine-readable ``code``."""

from __future__ import annotations


class SolverError(RuntimeError):
    code = "solver-error"

    def __init__(self, message: str = "", **details):
        self.details = details
        super().__init__(f"{self.code}: {message}" if message else self.code)


class NewtonDivergedError(SolverError):
    code = "newton-diverged"


class MaxIterationsError(SolverError):
    code = "max-iterations"


class MuBelowCriticalError(SolverError):
    code = "mu-below-critical"


class AsymptoticGuessBelowCriticalError(SolverError):
    code = "asymptotic-guess-below-critical"


class NoSignChangeError(SolverError):
    code = "no-sign-change"


class NonMonotoneError(SolverError):
    code = "non-monotone"


class SingularSystemError(SolverError):
    code = "singular-system"


class KernelDegenerateError(SolverError):
    code = "kernel-degenerate"


class GridError(ValueError):
    """Bad grid request (too coarse, bad eps, unknown scheme)."""


class ClosureError(ValueError):
    """Unsupported boundary closure combination."""


class InvalidParamsError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        text = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid parameters: {text}")
