from __future__ import annotations

import warnings

import pytest
from hypothesis import HealthCheck, settings

from plaquebif.discretization import build_grid
from plaquebif.model import REF_A, REF_B
from plaquebif.steady import solve_steady

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

EPS_SWEEP = (0.01, 0.005, 0.0025)


@pytest.fixture(autouse=True)
def _quiet_lapack():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", category=RuntimeWarning)
        yield


_cache: dict = {}


def steady_for(params, eps, N=64, scheme="uniform-FD2"):
    key = (params.digest(), eps, N, scheme)
    if key not in _cache:
        p = params.with_(eps=eps)
        _cache[key] = solve_steady(p, build_grid(eps, N, scheme))
    return _cache[key]


@pytest.fixture(scope="session")
def ref_a_states():
    return {e: steady_for(REF_A, e) for e in EPS_SWEEP}


@pytest.fixture(scope="session")
def ref_b_states():
    return {e: steady_for(REF_B, e) for e in EPS_SWEEP}
