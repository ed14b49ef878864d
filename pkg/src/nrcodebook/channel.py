"""Wideband geometric multipath channels for a dual-polarized UPA.

Entry ``(r, a, t)`` of a realization is

    sum_p gain_p * rx_p[r] * pol_p[pol(a)] * spatial_p[elem(a)] * exp(-j 2 pi t delay_p / n_3)

with half-wavelength spacing on both arrays.  The spatial response is the
conjugate of a DFT beam when the path's spatial frequencies sit on the
oversampled grid, so on-grid paths are matched exactly by a codeword.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .beamgrid import AntennaConfig

SECTOR = np.deg2rad(60.0)
ZENITH_SPREAD = np.deg2rad(30.0)


@dataclass(frozen=True)
class PathSet:
    azimuth: np.ndarray
    zenith: np.ndarray
    delay: np.ndarray
    gain: np.ndarray
    xpol: np.ndarray  # unit-modulus second-polarization phase
    aoa: np.ndarray  # receive-side arrival angle

    def __post_init__(self):
        n = len(self.gain)
        if n < 1:
            raise ValueError("need at least one path")
        for name in ("azimuth", "zenith", "delay", "xpol", "aoa"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {n}")

    @property
    def n_paths(self) -> int:
        return len(self.gain)

    def spatial_freqs(self) -> tuple[np.ndarray, np.ndarray]:
        f1 = 0.5 * np.sin(self.zenith) * np.sin(self.azimuth)
        f2 = 0.5 * np.cos(self.zenith)
        return f1, f2

    @classmethod
    def on_grid(cls, cfg: AntennaConfig, beams, delays, gains=None, xpol=None, aoa=None) -> "PathSet":
        """Paths whose spatial frequencies equal grid beams ``(m1, m2)``."""
        g1, g2 = cfg.grid_shape
        az, zen = [], []
        for m1, m2 in beams:
            f1 = _wrap(m1 / g1)
            f2 = _wrap(m2 / g2)
            z = np.arccos(np.clip(2 * f2, -1, 1))
            s = np.sin(z)
            if abs(2 * f1) > s + 1e-12:
                raise ValueError(f"beam ({m1}, {m2}) has no physical direction")
            az.append(np.arcsin(np.clip(2 * f1 / s, -1, 1)) if s > 0 else 0.0)
            zen.append(z)
        n = len(az)
        gains = np.ones(n) / np.sqrt(n) if gains is None else np.asarray(gains, dtype=complex)
        return cls(
            azimuth=np.array(az),
            zenith=np.array(zen),
            delay=np.asarray(delays, dtype=float),
            gain=np.asarray(gains, dtype=complex),
            xpol=np.ones(n, dtype=complex) if xpol is None else np.asarray(xpol, dtype=complex),
            aoa=np.zeros(n) if aoa is None else np.asarray(aoa, dtype=float),
        )


def _wrap(f: float) -> float:
    f = f % 1.0
    return f - 1.0 if f > 0.5 else f


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray  # (n_rx, n_ap, n_3)
    paths: PathSet | None = None
    seed: object = None
    cfg: AntennaConfig | None = field(default=None, compare=False)

    @property
    def n_rx(self) -> int:
        return self.h.shape[0]

    @property
    def n_3(self) -> int:
        return self.h.shape[2]


def random_paths(rng: np.random.Generator, n_paths: int, n_3: int) -> PathSet:
    power = rng.exponential(size=n_paths)
    power /= power.sum()
    return PathSet(
        azimuth=rng.uniform(-SECTOR, SECTOR, n_paths),
        zenith=np.pi / 2 + rng.uniform(-ZENITH_SPREAD, ZENITH_SPREAD, n_paths),
        delay=rng.uniform(0.0, n_3 / 4, n_paths),
        gain=np.sqrt(power) * np.exp(2j * np.pi * rng.uniform(size=n_paths)),
        xpol=np.exp(2j * np.pi * rng.uniform(size=n_paths)),
        aoa=rng.uniform(-np.pi / 2, np.pi / 2, n_paths),
    )


def array_response(cfg: AntennaConfig, paths: PathSet, carrier_ratio: float = 1.0) -> np.ndarray:
    """Per-path transmit response ``(P, n_ap)`` including polarization phases."""
    f1, f2 = paths.spatial_freqs()
    f1, f2 = f1 * carrier_ratio, f2 * carrier_ratio
    p = np.arange(cfg.n1)
    q = np.arange(cfg.n2)
    out = []
    for g in range(cfg.ng):
        horiz = np.exp(-2j * np.pi * np.outer(f1, p + g * cfg.n1))
        vert = np.exp(-2j * np.pi * np.outer(f2, q))
        spatial = (vert[:, :, None] * horiz[:, None, :]).reshape(len(f1), cfg.n_elem)
        out += [spatial, paths.xpol[:, None] * spatial]
    return np.concatenate(out, axis=1)


def synthesize(cfg: AntennaConfig, paths: PathSet, n_rx: int, n_3: int, carrier_ratio: float = 1.0) -> np.ndarray:
    if n_rx < 1 or n_3 < 1:
        raise ValueError("n_rx and n_3 must be positive")
    if np.any(paths.delay < 0) or np.any(paths.delay >= n_3):
        raise ValueError(f"path delays must lie in [0, {n_3})")
    tx = array_response(cfg, paths, carrier_ratio)
    rx = np.exp(-1j * np.pi * np.outer(np.sin(paths.aoa), np.arange(n_rx)))  # (P, n_rx)
    freq = np.exp(-2j * np.pi * np.outer(paths.delay, np.arange(n_3)) / n_3)  # (P, n_3)
    return np.einsum("p,pr,pa,pt->rat", paths.gain, rx, tx, freq)


def gen_channel(
    cfg: AntennaConfig,
    n_rx: int,
    n_3: int,
    seed=None,
    paths: PathSet | None = None,
    n_paths: int = 6,
) -> ChannelRealization:
    """Channel from explicit paths, or from ``n_paths`` random ones drawn with ``seed``."""
    if paths is None:
        if n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        paths = random_paths(np.random.default_rng(seed), n_paths, n_3)
    return ChannelRealization(h=synthesize(cfg, paths, n_rx, n_3), paths=paths, seed=seed, cfg=cfg)


def gen_ul_from_dl(
    dl: ChannelRealization,
    seed=None,
    carrier_ratio: float = 1.0,
    gain_jitter_db: float = 1.0,
) -> ChannelRealization:
    """Uplink realization sharing the downlink's path angles and delays.

    Path phases (gain and cross-polarization) are redrawn; magnitudes move by
    at most ``gain_jitter_db`` after renormalization.
    """
    if dl.paths is None or dl.cfg is None:
        raise ValueError("downlink realization carries no path metadata")
    rng = np.random.default_rng(seed)
    p = dl.paths
    jitter = 10 ** (rng.uniform(-gain_jitter_db / 2, gain_jitter_db / 2, p.n_paths) / 20)
    mag = np.abs(p.gain) * jitter
    mag /= np.sqrt(np.sum(mag**2))
    ul_paths = replace(
        p,
        gain=mag * np.exp(2j * np.pi * rng.uniform(size=p.n_paths)),
        xpol=np.exp(2j * np.pi * rng.uniform(size=p.n_paths)),
    )
    h = synthesize(dl.cfg, ul_paths, dl.n_rx, dl.n_3, carrier_ratio)
    return ChannelRealization(h=h, paths=ul_paths, seed=seed, cfg=dl.cfg)
