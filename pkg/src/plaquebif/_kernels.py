"""Hot nodewise kernels, each with a numba loop and a numpy twin.

The dispatchers at the bottom pick the numba version unless
``PLAQUEBIF_DISABLE_NUMBA`` is set. Both versions are kept importable so the
benchmark and the tests can compare them directly.

Parameter vector layout (``pack_rates``)::

    [k1, k2, K1, K2, rho1, rho2, rho3, rho4, D, lam, gamma, M0]
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit


def pack_rates(params, rho4: float) -> np.ndarray:
    return np.array(
        [
            params.k1,
            params.k2,
            params.K1,
            params.K2,
            params.rho1,
            params.rho2,
            params.rho3,
            rho4,
            params.D,
            params.lambda_,
            params.gamma,
            params.M0,
        ],
        dtype=np.float64,
    )


# --------------------------------------------------------------------------
# reaction right-hand sides R_L, R_H, R_F, R_p
# --------------------------------------------------------------------------


def reaction_terms_numpy(L, H, F, pars):
    k1, k2, K1, K2, rho1, rho2, rho3, rho4, D, lam, gamma, M0 = pars
    M = M0 - F
    uptake = k1 * M * L / (K1 + L)
    efflux = k2 * H * F / (K2 + F)
    out = np.empty((4, L.shape[0]))
    out[0] = -uptake - rho1 * L
    out[1] = -efflux - rho2 * H
    out[2] = uptake - efflux - lam * F * M * L / (M0 * (gamma + H)) + (rho3 - rho4) * M * F / M0
    out[3] = (lam * M * L / (gamma + H) - rho3 * M - rho4 * F) / M0
    return out


@njit
def reaction_terms_numba(L, H, F, pars):
    k1 = pars[0]
    k2 = pars[1]
    K1 = pars[2]
    K2 = pars[3]
    rho1 = pars[4]
    rho2 = pars[5]
    rho3 = pars[6]
    rho4 = pars[7]
    lam = pars[9]
    gamma = pars[10]
    M0 = pars[11]
    n = L.shape[0]
    out = np.empty((4, n))
    for i in range(n):
        l = L[i]
        h = H[i]
        f = F[i]
        m = M0 - f
        uptake = k1 * m * l / (K1 + l)
        efflux = k2 * h * f / (K2 + f)
        out[0, i] = -uptake - rho1 * l
        out[1, i] = -efflux - rho2 * h
        out[2, i] = uptake - efflux - lam * f * m * l / (M0 * (gamma + h)) + (rho3 - rho4) * m * f / M0
        out[3, i] = (lam * m * l / (gamma + h) - rho3 * m - rho4 * f) / M0
    return out


# --------------------------------------------------------------------------
# partial derivatives d R_X / d (L, H, F); shape (4, 3, N)
# --------------------------------------------------------------------------


def reaction_jacobian_numpy(L, H, F, pars):
    k1, k2, K1, K2, rho1, rho2, rho3, rho4, D, lam, gamma, M0 = pars
    M = M0 - F
    gH = gamma + H
    out = np.zeros((4, 3, L.shape[0]))
    # R_L
    out[0, 0] = -k1 * M * K1 / (K1 + L) ** 2 - rho1
    out[0, 2] = k1 * L / (K1 + L)
    # R_H
    out[1, 1] = -k2 * F / (K2 + F) - rho2
    out[1, 2] = -k2 * H * K2 / (K2 + F) ** 2
    # R_F
    out[2, 0] = k1 * M * K1 / (K1 + L) ** 2 - lam * F * M / (M0 * gH)
    out[2, 1] = -k2 * F / (K2 + F) + lam * F * M * L / (M0 * gH**2)
    out[2, 2] = (
        -k1 * L / (K1 + L)
        - k2 * H * K2 / (K2 + F) ** 2
        - lam * (M0 - 2.0 * F) * L / (M0 * gH)
        + (rho3 - rho4) * (M0 - 2.0 * F) / M0
    )
    # R_p
    out[3, 0] = lam * M / (M0 * gH)
    out[3, 1] = -lam * M * L / (M0 * gH**2)
    out[3, 2] = (-lam * L / gH + rho3 - rho4) / M0
    return out


@njit
def reaction_jacobian_numba(L, H, F, pars):
    k1 = pars[0]
    k2 = pars[1]
    K1 = pars[2]
    K2 = pars[3]
    rho1 = pars[4]
    rho2 = pars[5]
    rho3 = pars[6]
    rho4 = pars[7]
    lam = pars[9]
    gamma = pars[10]
    M0 = pars[11]
    n = L.shape[0]
    out = np.zeros((4, 3, n))
    for i in range(n):
        l = L[i]
        h = H[i]
        f = F[i]
        m = M0 - f
        gh = gamma + h
        kl = K1 + l
        kf = K2 + f
        out[0, 0, i] = -k1 * m * K1 / (kl * kl) - rho1
        out[0, 2, i] = k1 * l / kl
        out[1, 1, i] = -k2 * f / kf - rho2
        out[1, 2, i] = -k2 * h * K2 / (kf * kf)
        out[2, 0, i] = k1 * m * K1 / (kl * kl) - lam * f * m / (M0 * gh)
        out[2, 1, i] = -k2 * f / kf + lam * f * m * l / (M0 * gh * gh)
        out[2, 2, i] = (
            -k1 * l / kl
            - k2 * h * K2 / (kf * kf)
            - lam * (M0 - 2.0 * f) * l / (M0 * gh)
            + (rho3 - rho4) * (M0 - 2.0 * f) / M0
        )
        out[3, 0, i] = lam * m / (M0 * gh)
        out[3, 1, i] = -lam * m * l / (M0 * gh * gh)
        out[3, 2, i] = (-lam * l / gh + rho3 - rho4) / M0
    return out


# --------------------------------------------------------------------------
# cumulative integral on a uniform grid, cubic interpolant per interval
# --------------------------------------------------------------------------


def cumulative_cubic_numpy(y, h):
    n = y.shape[0]
    seg = np.empty(n - 1)
    seg[0] = 9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3]
    seg[1 : n - 2] = -y[0 : n - 3] + 13.0 * y[1 : n - 2] + 13.0 * y[2 : n - 1] - y[3:n]
    seg[n - 2] = y[n - 4] - 5.0 * y[n - 3] + 19.0 * y[n - 2] + 9.0 * y[n - 1]
    out = np.zeros(n)
    out[1:] = np.cumsum(seg) * (h / 24.0)
    return out


@njit
def cumulative_cubic_numba(y, h):
    n = y.shape[0]
    out = np.zeros(n)
    c = h / 24.0
    acc = c * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3])
    out[1] = acc
    for i in range(1, n - 2):
        acc += c * (-y[i - 1] + 13.0 * y[i] + 13.0 * y[i + 1] - y[i + 2])
        out[i + 1] = acc
    acc += c * (y[n - 4] - 5.0 * y[n - 3] + 19.0 * y[n - 2] + 9.0 * y[n - 1])
    out[n - 1] = acc
    return out


if USE_NUMBA:
    reaction_terms = reaction_terms_numba
    reaction_jacobian = reaction_jacobian_numba
    cumulative_cubic = cumulative_cubic_numba
else:
    reaction_terms = reaction_terms_numpy
    reaction_jacobian = reaction_jacobian_numpy
    cumulative_cubic = cumulative_cubic_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
