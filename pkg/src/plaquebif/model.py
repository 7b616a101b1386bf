"""Model constants, advisory validation and closed-form asymptotics.

All quantities are nondimensional. ``mu`` is the canonical control parameter;
the blood LDL level ``L0`` is always derived from it::

    L0 = (rho3 * (gamma + H0) + eps * mu) / lambda
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, fields, replace

from .errors import InvalidParamsError

# config-file key -> attribute name (``lambda`` is a Python keyword)
KEY_TO_ATTR = {
    "k1": "k1",
    "k2": "k2",
    "K1": "K1",
    "K2": "K2",
    "rho1": "rho1",
    "rho2": "rho2",
    "rho3": "rho3",
    "D": "D",
    "lambda": "lambda_",
    "gamma": "gamma",
    "M0": "M0",
    "beta1": "beta1",
    "beta2": "beta2",
    "H0": "H0",
    "eps": "eps",
    "mu": "mu",
}
ATTR_TO_KEY = {v: k for k, v in KEY_TO_ATTR.items()}
PARAM_KEYS = tuple(KEY_TO_ATTR)

_POSITIVE = ("k1", "k2", "K1", "K2", "rho1", "rho2", "rho3", "D", "lambda_", "gamma", "M0", "beta1", "beta2", "H0")
EPS_MAX = 0.1


@dataclass(frozen=True)
class ModelParams:
    k1: float
    k2: float
    K1: float
    K2: float
    rho1: float
    rho2: float
    rho3: float
    D: float
    lambda_: float
    gamma: float
    M0: float
    beta1: float
    beta2: float
    H0: float
    eps: float
    mu: float

    @property
    def L0(self) -> float:
        return (self.rho3 * (self.gamma + self.H0) + self.eps * self.mu) / self.lambda_

    def with_(self, **changes) -> "ModelParams":
        changes = {KEY_TO_ATTR.get(k, k): float(v) for k, v in changes.items()}
        return replace(self, **changes)

    def as_config(self) -> dict[str, float]:
        """Field values keyed by their config-file names, in canonical order."""
        return {ATTR_TO_KEY[f.name]: float(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_config(cls, mapping) -> "ModelParams":
        missing = [k for k in PARAM_KEYS if k not in mapping]
        if missing:
            raise KeyError(missing[0])
        return cls(**{KEY_TO_ATTR[k]: float(mapping[k]) for k in PARAM_KEYS})

    def digest(self) -> str:
        text = ",".join(f"{k}={v!r}" for k, v in self.as_config().items())
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Violation:
    field: str
    value: float
    message: str

    def __str__(self) -> str:
        return f"{self.message} ({self.field}={self.value!r})"


def validate(params: ModelParams) -> list[Violation]:
    """Every violated invariant; empty iff the parameters are usable."""
    out = []
    for name in _POSITIVE:
        value = getattr(params, name)
        if not (value > 0 and math.isfinite(value)):
            out.append(Violation(ATTR_TO_KEY[name], value, f"{ATTR_TO_KEY[name]} must be strictly positive"))
    if not (0 < params.eps <= EPS_MAX):
        out.append(Violation("eps", params.eps, "eps out of range"))
    if not math.isfinite(params.mu):
        out.append(Violation("mu", params.mu, "mu must be finite"))
    if params.lambda_ > 0:
        L0 = params.L0
        if not L0 > 0:
            out.append(Violation("L0", L0, "derived L0 nonpositive"))
    return out


def require_valid(params: ModelParams, override: bool = False) -> None:
    if override:
        return
    bad = validate(params)
    if bad:
        raise InvalidParamsError(bad)


def _uptake_ratio(p: ModelParams) -> float:
    # k1 M0 / (lambda K1 + rho3 (gamma + H0))
    return p.k1 * p.M0 / (p.lambda_ * p.K1 + p.rho3 * (p.gamma + p.H0))


def mu_c(params: ModelParams) -> float:
    """Critical value of mu above which a radial steady state with rho4 > 0 exists."""
    p = params
    gH = p.gamma + p.H0
    return (p.rho3 / p.beta1) * (gH * (p.lambda_ * _uptake_ratio(p) + p.rho1) - p.rho2 * p.H0)


@dataclass(frozen=True)
class AsymptoticCoefficients:
    mu_c: float
    L_base: float
    Lstar1: float
    Hstar1: float
    Fstar1: float
    rho4_leading: float
    drho4_dmu_leading: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def asymptotic_coefficients(params: ModelParams) -> AsymptoticCoefficients:
    """O(eps) profile coefficients and the leading-order rho4(mu).

    ``L_base`` is the O(1) LDL level rho3 (gamma + H0) / lambda.
    """
    p = params
    gH = p.gamma + p.H0
    q = _uptake_ratio(p)
    Lstar1 = p.mu / p.lambda_ - (p.rho3 * gH / p.beta1) * (q + p.rho1 / p.lambda_)
    Hstar1 = -p.rho2 * p.H0 / p.beta1
    Fstar1 = (p.rho3 * gH / (p.beta2 * p.D)) * q
    mc = mu_c(p)
    if Fstar1 != 0.0:
        slope = p.M0 / (gH * Fstar1)
    else:
        slope = math.inf
    rho4 = slope * (p.mu - mc) if math.isfinite(slope) else math.copysign(math.inf, p.mu - mc)
    return AsymptoticCoefficients(
        mu_c=mc,
        L_base=p.rho3 * gH / p.lambda_,
        Lstar1=Lstar1,
        Hstar1=Hstar1,
        Fstar1=Fstar1,
        rho4_leading=rho4,
        drho4_dmu_leading=slope,
    )


def mu_asymptotic(params: ModelParams, n: int) -> float:
    """Leading-order bifurcation value (gamma + H0) n^2 (1 - n^2)."""
    return (params.gamma + params.H0) * n * n * (1 - n * n)


# Generic O(1) set used for steady-state validation.
REF_A = ModelParams(
    k1=1.0,
    k2=1.0,
    K1=1.0,
    K2=1.0,
    rho1=0.5,
    rho2=0.5,
    rho3=1.0,
    D=1.0,
    lambda_=1.0,
    gamma=1.0,
    M0=1.0,
    beta1=1.0,
    beta2=1.0,
    H0=1.0,
    eps=0.01,
    mu=3.0,
)

# Bifurcation-valid set. mu_c sits below the n = 2, 3 bifurcation values
# while the interface-layer groups eps*(lambda q + rho1)/beta1,
# eps*rho2/beta1 and eps*rho4/(beta2 D) stay small over eps <= 0.01, so the
# O(eps) corrections are in their asymptotic regime on that range.
REF_B = ModelParams(
    k1=42.0,
    k2=1.0,
    K1=1.0,
    K2=1.0,
    rho1=0.05,
    rho2=80.0,
    rho3=33.0,
    D=1.0,
    lambda_=33.0,
    gamma=0.1,
    M0=1.0,
    beta1=20.0,
    beta2=1.0,
    H0=1.0,
    eps=0.01,
    mu=-13.2,
)

PRESETS = {"REF-A": REF_A, "REF-B": REF_B}
