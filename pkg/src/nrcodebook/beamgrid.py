"""Oversampled 2D-DFT beam grid for dual-polarized uniform planar arrays."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

SUPPORTED_OVERSAMPLING = ((4, 4), (4, 1), (1, 1))


@dataclass(frozen=True)
class AntennaConfig:
    """gNB array geometry.

    Ports are ordered panel-major, then polarization, then element with the
    horizontal index running fastest (``q * n1 + p``).
    """

    n1: int
    n2: int = 1
    o1: int = 4
    o2: int = 1
    ng: int = 1

    def __post_init__(self):
        for name in ("n1", "n2", "o1", "o2", "ng"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if (self.o1, self.o2) not in SUPPORTED_OVERSAMPLING:
            raise ValueError(
                f"(o1, o2)={self.o1, self.o2} not in supported set {SUPPORTED_OVERSAMPLING}"
            )

    @property
    def n_elem(self) -> int:
        """Elements per polarization per panel."""
        return self.n1 * self.n2

    @property
    def n_ap(self) -> int:
        return 2 * self.ng * self.n1 * self.n2

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.o1 * self.n1, self.o2 * self.n2


def dft_beam(cfg: AntennaConfig, m1: int, m2: int) -> np.ndarray:
    """Unit-modulus beam ``kron(u_{m2}, g_{m1})`` of length ``n1 * n2``."""
    g1, g2 = cfg.grid_shape
    if not (0 <= m1 < g1 and 0 <= m2 < g2):
        raise IndexError(f"beam ({m1}, {m2}) outside grid {g1}x{g2}")
    horiz = np.exp(2j * np.pi * np.arange(cfg.n1) * m1 / g1)
    vert = np.exp(2j * np.pi * np.arange(cfg.n2) * m2 / g2)
    return np.kron(vert, horiz)


def beam_grid(cfg: AntennaConfig) -> np.ndarray:
    """All grid beams as columns, shape ``(n1*n2, g1*g2)``; column ``m1*g2 + m2``."""
    g1, g2 = cfg.grid_shape
    horiz = np.exp(2j * np.pi * np.outer(np.arange(cfg.n1), np.arange(g1)) / g1)
    vert = np.exp(2j * np.pi * np.outer(np.arange(cfg.n2), np.arange(g2)) / g2)
    # element (q*n1 + p), beam (m1*g2 + m2)
    full = vert[:, None, None, :] * horiz[None, :, :, None]
    return full.reshape(cfg.n_elem, g1 * g2)


def rotation_hypotheses(cfg: AntennaConfig) -> list[tuple[int, int]]:
    return list(itertools.product(range(cfg.o1), range(cfg.o2)))


def rotation_beam_indices(cfg: AntennaConfig, q1: int, q2: int) -> list[tuple[int, int]]:
    """(m1, m2) of the ``n1*n2`` orthogonal beams in rotation (q1, q2).

    Beam ``b`` of the rotation has ``m1 = o1*(b % n1) + q1`` and
    ``m2 = o2*(b // n1) + q2``.
    """
    if not (0 <= q1 < cfg.o1 and 0 <= q2 < cfg.o2):
        raise IndexError(f"rotation ({q1}, {q2}) outside {cfg.o1}x{cfg.o2}")
    return [
        (cfg.o1 * (b % cfg.n1) + q1, cfg.o2 * (b // cfg.n1) + q2)
        for b in range(cfg.n_elem)
    ]


def rotation_beams(cfg: AntennaConfig, q1: int, q2: int) -> np.ndarray:
    """Orthogonal beam basis of one rotation, shape ``(n1*n2, n1*n2)``."""
    return np.stack(
        [dft_beam(cfg, m1, m2) for m1, m2 in rotation_beam_indices(cfg, q1, q2)], axis=1
    )


def beam_in_rotation(cfg: AntennaConfig, m1: int, m2: int) -> tuple[int, int, int]:
    """Inverse of :func:`rotation_beam_indices`: ``(q1, q2, b)``."""
    q1, k1 = m1 % cfg.o1, m1 // cfg.o1
    q2, k2 = m2 % cfg.o2, m2 // cfg.o2
    return q1, q2, k2 * cfg.n1 + k1
