"""Backend selection for the hot kernels.

Set ``UEASSOC_DISABLE_NUMBA=1`` before importing :mod:`ueassoc` to run every
kernel on the pure numpy/Python path. Without numba installed the fallback is
chosen automatically.
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("UEASSOC_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba as _numba
except ImportError:
    _numba = None

USE_NUMBA = _numba is not None
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when the numba backend is active, identity otherwise."""
    if USE_NUMBA:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
