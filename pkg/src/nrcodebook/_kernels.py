"""Hot inner loops with a numba path and a pure-numpy path.

Set ``NRCB_DISABLE_NUMBA=1`` to force the numpy implementations (also used
automatically when numba cannot be imported).
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("NRCB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

numba_default = {"nogil": True, "cache": True, "fastmath": False, "boundscheck": False}


def cophase_metric_numpy(proj: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """``out[t, c, g] = sum_r |sum_b coeffs[c, b] * proj[t, r, b, g]|**2``."""
    y = np.einsum("cb,trbg->tcrg", coeffs, proj, optimize=True)
    return (y.real**2 + y.imag**2).sum(axis=2)


if HAVE_NUMBA:

    @njit(**numba_default)
    def _cophase_metric_jit(proj, coeffs):
        n_t, n_r, n_b, n_g = proj.shape
        n_c = coeffs.shape[0]
        out = np.zeros((n_t, n_c, n_g))
        for t in range(n_t):
            for c in range(n_c):
                for r in range(n_r):
                    for g in range(n_g):
                        acc = 0j
                        for b in range(n_b):
                            acc += coeffs[c, b] * proj[t, r, b, g]
                        out[t, c, g] += acc.real * acc.real + acc.imag * acc.imag
        return out

    def cophase_metric_numba(proj: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
        return _cophase_metric_jit(
            np.ascontiguousarray(proj, dtype=np.complex128),
            np.ascontiguousarray(coeffs, dtype=np.complex128),
        )

    cophase_metric = cophase_metric_numba
else:
    cophase_metric_numba = None
    cophase_metric = cophase_metric_numpy


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
