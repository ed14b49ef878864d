"""Scalar amplitude/phase quantizers and the combinatorial subset index."""
from __future__ import annotations

import enum
from math import comb
from typing import Iterable, Sequence

import numpy as np

PSK_SIZES = (4, 8, 16)


class AmpGrid(enum.Enum):
    WB3BIT = "wb3bit"  # Type II wideband amplitude
    SB1BIT = "sb1bit"  # Type II subband amplitude
    REF4BIT = "ref4bit"  # Enhanced Type II per-polarization reference
    SB3BIT = "sb3bit"  # Enhanced Type II per-coefficient amplitude

    @property
    def levels(self) -> np.ndarray:
        return _LEVELS[self]

    @property
    def size(self) -> int:
        return len(_LEVELS[self])

    @property
    def bits(self) -> int:
        return int(np.ceil(np.log2(self.size)))


def _geometric(n: int, base: float) -> np.ndarray:
    top = n - 1
    lv = np.array([base ** (top - k) for k in range(n)])
    lv[0] = 0.0
    return lv


_LEVELS = {
    AmpGrid.WB3BIT: _geometric(8, 1 / np.sqrt(2)),
    AmpGrid.SB1BIT: np.array([1 / np.sqrt(2), 1.0]),
    AmpGrid.REF4BIT: _geometric(16, 2 ** -0.25),
    AmpGrid.SB3BIT: _geometric(8, 1 / np.sqrt(2)),
}
for _lv in _LEVELS.values():
    _lv.setflags(write=False)


def _check_psk(n_psk: int) -> None:
    if n_psk not in PSK_SIZES:
        raise ValueError(f"n_psk must be one of {PSK_SIZES}, got {n_psk}")


def psk_phase(c: int, n_psk: int) -> complex:
    _check_psk(n_psk)
    if not 0 <= c < n_psk:
        raise ValueError(f"phase index {c} outside [0, {n_psk})")
    return complex(np.exp(2j * np.pi * c / n_psk))


def psk_phases(c, n_psk) -> np.ndarray:
    """Vectorized ``exp(j*2*pi*c/n_psk)``; ``n_psk`` may be an array."""
    return np.exp(2j * np.pi * np.asarray(c) / np.asarray(n_psk))


def quantize_phase(z, n_psk) -> np.ndarray:
    """Nearest PSK index to ``angle(z)``."""
    ang = np.angle(z)
    n = np.asarray(n_psk)
    return (np.rint(ang * n / (2 * np.pi)).astype(np.int64) % n).astype(np.int64)


def amp_value(k: int, grid: AmpGrid) -> float:
    lv = grid.levels
    if not 0 <= k < len(lv):
        raise ValueError(f"amplitude index {k} outside [0, {len(lv)}) for {grid.name}")
    return float(lv[k])


def quantize_amp(x, grid: AmpGrid):
    """Nearest level on a log (dB) scale; ties go to the larger level.

    The grids are geometric, so distance is measured between logarithms.
    On grids with a zero level, zero is chosen below half the smallest
    nonzero level.  Accepts a scalar
    (returns ``int``) or an array (returns an int array).
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise ValueError("amplitude must be non-negative")
    lv = grid.levels
    first = 1 if lv[0] == 0 else 0
    d = np.abs(np.log(np.maximum(arr, np.finfo(float).tiny))[..., None] - np.log(lv[first:]))
    # reversed argmin picks the last (largest) level among equal distances
    idx = len(lv) - 1 - np.argmin(d[..., ::-1], axis=-1)
    if first:
        idx = np.where(arr < lv[1] / 2, 0, idx)
    if arr.ndim == 0:
        return int(idx)
    return idx.astype(np.int64)


def comb_encode(indices: Sequence[int], n: int) -> int:
    """Combinatorial-number-system rank of a sorted subset of ``range(n)``."""
    idx = list(indices)
    for a, b in zip(idx, idx[1:]):
        if b <= a:
            raise ValueError(f"indices must be strictly increasing: {idx}")
    if idx and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError(f"indices {idx} outside [0, {n})")
    return sum(comb(c, i + 1) for i, c in enumerate(idx))


def comb_decode(code: int, n: int, size: int) -> tuple[int, ...]:
    if not 0 <= code < comb(n, size):
        raise ValueError(f"code {code} outside [0, C({n},{size}))")
    out = []
    rest = code
    hi = n
    for i in range(size, 0, -1):
        c = i - 1
        while c + 1 < hi and comb(c + 1, i) <= rest:
            c += 1
        out.append(c)
        rest -= comb(c, i)
        hi = c
    return tuple(reversed(out))


def bits_for(n_values: int) -> int:
    """Width of a field holding ``n_values`` distinct values."""
    if n_values < 1:
        raise ValueError("field range must be non-empty")
    return int(n_values - 1).bit_length()


def subsets(n: int, size: int) -> Iterable[tuple[int, ...]]:
    from itertools import combinations

    return combinations(range(n), size)
