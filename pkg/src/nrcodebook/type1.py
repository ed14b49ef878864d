"""Type I codebook: single-panel and multi-panel.

Layers are built from the wideband beam ``w`` and, for rank 3 and 4, a
neighbor beam ``w~`` on the same vertical index with the horizontal index
advanced by ``o1 * i13``.  Layers sharing a beam use opposite co-phases
``+phi_n`` / ``-phi_n`` so the columns stay orthogonal.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .beamgrid import AntennaConfig, beam_grid, dft_beam
from .linalg import as_tensor, check_ports, first_argmax, normalize_columns

# (use neighbor beam, sign of the second-polarization co-phase) per layer
_LAYER_PLAN = {
    1: ((0, 1),),
    2: ((0, 1), (0, -1)),
    3: ((0, 1), (1, 1), (0, -1)),
    4: ((0, 1), (1, 1), (0, -1), (1, -1)),
}


@dataclass(frozen=True)
class PmiType1SP:
    i11: int
    i12: int
    i2: tuple[int, ...]
    i13: int = 0


@dataclass(frozen=True)
class PmiType1MP:
    i11: int
    i12: int
    i14: tuple[int, ...]
    i2: tuple[tuple[int, ...], ...]
    i13: int = 0


def phi(n: int) -> complex:
    return complex(np.exp(1j * np.pi * n / 2))


def a_p(p: int) -> complex:
    return complex(np.exp(1j * np.pi / 4) * np.exp(1j * np.pi * p / 2))


def b_n(n: int) -> complex:
    return complex(np.exp(-1j * np.pi / 4) * np.exp(1j * np.pi * n / 2))


def cophase_size(rank: int) -> int:
    return 4 if rank == 1 else 2


def i14_ranges(ng: int, c_m: int) -> tuple[int, ...]:
    return (4,) * (ng - 1) if c_m == 1 else (4, 4)


def i2_ranges(rank: int, c_m: int) -> tuple[int, ...]:
    return (cophase_size(rank),) if c_m == 1 else (cophase_size(rank), 2, 2)


def i13_range(cfg: AntennaConfig, rank: int) -> range:
    return range(1, cfg.n1) if rank >= 3 else range(0, 1)


def check_rank_sp(cfg: AntennaConfig, rank: int) -> None:
    if cfg.ng != 1:
        raise ValueError("single-panel codebook requires ng=1")
    _check_rank(cfg, rank)


def check_mp(cfg: AntennaConfig, rank: int, c_m: int) -> None:
    if cfg.n_ap not in (8, 16, 32):
        raise ValueError(f"multi-panel requires n_ap in {{8,16,32}}, got {cfg.n_ap}")
    if cfg.ng not in (2, 4):
        raise ValueError(f"multi-panel requires ng in {{2,4}}, got {cfg.ng}")
    if c_m not in (1, 2):
        raise ValueError(f"codebook mode must be 1 or 2, got {c_m}")
    if c_m == 2 and cfg.ng != 2:
        raise ValueError("codebook mode 2 is only supported with ng=2")
    _check_rank(cfg, rank)


def _check_rank(cfg: AntennaConfig, rank: int) -> None:
    if rank not in _LAYER_PLAN:
        raise ValueError(f"rank {rank} unsupported (1..4)")
    if rank >= 3 and cfg.n1 < 2:
        raise ValueError("rank 3/4 needs n1 >= 2 for the neighbor beam")


def _check_range(name: str, value: int, upper: int) -> None:
    if not 0 <= value < upper:
        raise ValueError(f"{name}={value} outside [0, {upper})")


def panel_coeffs(ng: int, c_m: int, i14, i2, sign: int) -> np.ndarray:
    """Per (panel, polarization) scalars applied to the layer beam."""
    if c_m == 1:
        cp = phi(i2[0])
        out = []
        for g in range(ng):
            a = 1.0 if g == 0 else a_p(i14[g - 1])
            out += [a, a * sign * cp]
        return np.array(out, dtype=complex)
    p1, p2 = i14
    n0, n1, n2 = i2
    return np.array(
        [1.0, sign * phi(n0), a_p(p1) * b_n(n1), sign * a_p(p2) * b_n(n2)], dtype=complex
    )


def neighbor_m1(cfg: AntennaConfig, m1: int, k: int) -> int:
    return (m1 + cfg.o1 * k) % (cfg.o1 * cfg.n1)


def _reconstruct(cfg, rank, m1, m2, i13, i14, i2_seq, c_m) -> np.ndarray:
    w = dft_beam(cfg, m1, m2)
    beams = (w, dft_beam(cfg, neighbor_m1(cfg, m1, i13), m2) if rank >= 3 else w)
    out = np.empty((len(i2_seq), cfg.n_ap, rank), dtype=complex)
    for t, i2 in enumerate(i2_seq):
        for layer, (sel, sign) in enumerate(_LAYER_PLAN[rank]):
            c = panel_coeffs(cfg.ng, c_m, i14, i2, sign)
            out[t, :, layer] = np.kron(c, beams[sel])
    return normalize_columns(out)


def _validate_beam(cfg, rank, i11, i12, i13):
    g1, g2 = cfg.grid_shape
    _check_range("i11", i11, g1)
    _check_range("i12", i12, g2)
    if i13 not in i13_range(cfg, rank):
        raise ValueError(f"i13={i13} invalid for rank {rank} (allowed {list(i13_range(cfg, rank))})")


def decode_type1_sp(pmi: PmiType1SP, cfg: AntennaConfig, rank: int = 1) -> np.ndarray:
    """Precoder ``(n_3, n_ap, rank)`` with unit-norm columns."""
    check_rank_sp(cfg, rank)
    _validate_beam(cfg, rank, pmi.i11, pmi.i12, pmi.i13)
    for n in pmi.i2:
        _check_range("i2", n, cophase_size(rank))
    return _reconstruct(cfg, rank, pmi.i11, pmi.i12, pmi.i13, (), [(n,) for n in pmi.i2], 1)


def decode_type1_mp(pmi: PmiType1MP, cfg: AntennaConfig, rank: int = 1, c_m: int = 1) -> np.ndarray:
    check_mp(cfg, rank, c_m)
    _validate_beam(cfg, rank, pmi.i11, pmi.i12, pmi.i13)
    r14 = i14_ranges(cfg.ng, c_m)
    if len(pmi.i14) != len(r14):
        raise ValueError(f"i14 must have {len(r14)} entries, got {len(pmi.i14)}")
    for v, hi in zip(pmi.i14, r14):
        _check_range("i14", v, hi)
    r2 = i2_ranges(rank, c_m)
    for entry in pmi.i2:
        if len(entry) != len(r2):
            raise ValueError(f"i2 entries must have {len(r2)} values, got {entry}")
        for v, hi in zip(entry, r2):
            _check_range("i2", v, hi)
    return _reconstruct(cfg, rank, pmi.i11, pmi.i12, pmi.i13, pmi.i14, pmi.i2, c_m)


def _projections(h: np.ndarray, cfg: AntennaConfig) -> np.ndarray:
    """``proj[t, r, block, beam]`` for every (panel, polarization) block."""
    grid = beam_grid(cfg)
    n = cfg.n_elem
    blocks = h.reshape(h.shape[0], 2 * cfg.ng, n, h.shape[2])
    return np.einsum("rbet,eg->trbg", blocks, grid)


def _search(h, cfg, rank, c_m):
    h = as_tensor(h)
    check_ports(h, cfg.n_ap)
    if h.shape[2] < 1:
        raise ValueError("need at least one subband")
    proj = _projections(h, cfg)
    wb_cands = list(itertools.product(*[range(r) for r in (i14_ranges(cfg.ng, c_m) if cfg.ng > 1 else ())]))
    sb_cands = list(itertools.product(*[range(r) for r in i2_ranges(rank, c_m)]))
    n_wb, n_sb = len(wb_cands), len(sb_cands)
    g1, g2 = cfg.grid_shape
    m1 = np.arange(g1 * g2) // g2
    m2 = np.arange(g1 * g2) % g2
    ks = list(i13_range(cfg, rank))
    perms = [((m1 + cfg.o1 * k) % g1) * g2 + m2 for k in ks]
    norm = 2 * cfg.ng * cfg.n_elem

    metrics = {}
    for sign in {s for _, s in _LAYER_PLAN[rank]}:
        coeffs = np.array(
            [panel_coeffs(cfg.ng, c_m, wb, sb, sign) for wb in wb_cands for sb in sb_cands]
        )
        m = _kernels.cophase_metric(proj, coeffs) / norm
        metrics[sign] = m.reshape(m.shape[0], n_wb, n_sb, g1 * g2)

    total = 0.0
    for sel, sign in _LAYER_PLAN[rank]:
        m = metrics[sign]
        if sel:
            total = total + np.stack([m[..., p] for p in perms], axis=-1)
        else:
            total = total + m[..., None]
    # total[t, wb, sb, g, k]
    wide = total.max(axis=2).sum(axis=0)  # (wb, g, k)
    best = first_argmax(np.transpose(wide, (1, 2, 0)))
    g, k_idx, wb = np.unravel_index(best, (g1 * g2, len(ks), n_wb))
    per_sb = total[:, wb, :, g, k_idx]  # (t, sb)
    i2 = [sb_cands[first_argmax(row)] for row in per_sb]
    return int(m1[g]), int(m2[g]), ks[k_idx], wb_cands[wb], i2


def encode_type1_sp(channel, cfg: AntennaConfig, rank: int = 1) -> PmiType1SP:
    """Exhaustive search: wideband beam first, then per-subband co-phase."""
    check_rank_sp(cfg, rank)
    m1, m2, k, _, i2 = _search(channel, cfg, rank, 1)
    return PmiType1SP(i11=m1, i12=m2, i2=tuple(int(v[0]) for v in i2), i13=k)


def encode_type1_mp(channel, cfg: AntennaConfig, rank: int = 1, c_m: int = 1) -> PmiType1MP:
    check_mp(cfg, rank, c_m)
    m1, m2, k, wb, i2 = _search(channel, cfg, rank, c_m)
    return PmiType1MP(
        i11=m1,
        i12=m2,
        i14=tuple(int(v) for v in wb),
        i2=tuple(tuple(int(x) for x in v) for v in i2),
        i13=k,
    )
