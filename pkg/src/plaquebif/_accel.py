"""Numba switch.

Set ``PLAQUEBIF_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba
is missing the numpy path is used silently.
"""

from __future__ import annotations

import os

_DISABLED = os.environ.get("PLAQUEBIF_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if args and callable(args[0]):
        return args[0]
    return lambda f: f
