"""Enhanced Type II codebook and its port-selection variant.

Per layer the subband coefficients of the ``2L`` beams are moved to the
delay domain, the ``m_v`` strongest delay bins are kept, and a bitmap marks
which of the ``2L * m_v`` coefficients are reported.  Delay bins are
remapped so the strongest coefficient sits at bin 0, and stored in
ascending order (bin 0 first).

For ``n_3 > 19`` the nonzero bins are restricted to a window of ``2 m_v``
consecutive bins starting at ``i15`` (in ``[-2 m_v + 1, 0]``), common to
all layers.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, comb, floor

import numpy as np

from . import multibeam as mb
from .beamgrid import AntennaConfig
from .linalg import as_tensor, check_ports, first_argmax, target_precoders, top_k_stable
from .quantizers import PSK_SIZES, AmpGrid, comb_decode, comb_encode, psk_phases, quantize_amp, quantize_phase

REF_FULL = 15
WINDOW_THRESHOLD = 19


def _frac(x) -> Fraction:
    return Fraction(x).limit_denominator(64)


@dataclass(frozen=True)
class EType2Params:
    l_beams: int = 4
    p_v: Fraction = Fraction(1, 4)
    beta: Fraction = Fraction(1, 2)
    r: int = 1
    n_3: int = 13

    def __post_init__(self):
        object.__setattr__(self, "p_v", _frac(self.p_v))
        object.__setattr__(self, "beta", _frac(self.beta))
        if self.l_beams not in (2, 4, 6):
            raise ValueError(f"L must be 2, 4 or 6, got {self.l_beams}")
        if self.p_v not in (Fraction(1, 4), Fraction(1, 8)):
            raise ValueError(f"p_v must be 1/4 or 1/8, got {self.p_v}")
        if self.beta not in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
            raise ValueError(f"beta must be 1/4, 1/2 or 3/4, got {self.beta}")
        if self.r not in (1, 2):
            raise ValueError(f"R must be 1 or 2, got {self.r}")
        if self.n_3 < 1:
            raise ValueError("n_3 must be positive")
        if self.windowed and 2 * self.m_v > self.n_3:
            raise ValueError("delay window 2*m_v exceeds n_3")

    @property
    def m_v(self) -> int:
        return ceil(self.p_v * self.n_3 / self.r)

    @property
    def windowed(self) -> bool:
        return self.n_3 > WINDOW_THRESHOLD

    def budget(self, rank: int) -> int:
        """Total bitmap ones allowed over all layers."""
        return max(rank, floor(2 * self.l_beams * self.m_v * rank * self.beta))


@dataclass(frozen=True, kw_only=True)
class _ETypeReport:
    i15: int
    n3: tuple[tuple[int, ...], ...]
    i17: tuple[tuple[int, ...], ...]
    i18: tuple[int, ...]
    i23: tuple[tuple[int, int], ...]
    i24: tuple[tuple[int, ...], ...]
    i25: tuple[tuple[int, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.i18)

    @property
    def m_nz(self) -> tuple[int, ...]:
        return tuple(sum(b) for b in self.i17)


@dataclass(frozen=True, kw_only=True)
class PmiEType2(_ETypeReport):
    q1: int
    q2: int
    i12: int


@dataclass(frozen=True, kw_only=True)
class PmiEType2PS(_ETypeReport):
    i11: int


def fd_basis(n_3: int, n3) -> np.ndarray:
    """Columns ``exp(j 2 pi t n3[f] / n_3)`` over subbands ``t``."""
    n3 = list(n3)
    if len(set(n3)) != len(n3) or any(not 0 <= v < n_3 for v in n3):
        raise ValueError(f"delay bins {n3} must be distinct and in [0, {n_3})")
    t = np.arange(n_3)[:, None]
    return np.exp(2j * np.pi * t * np.array(n3)[None, :] / n_3)


def remap_fd(n3, f_star: int, n_3: int) -> tuple[int, ...]:
    """Shift bins so ``n3[f_star]`` becomes 0 and rotate it to the front."""
    n3 = list(n3)
    if not 0 <= f_star < len(n3):
        raise ValueError(f"f_star={f_star} outside [0, {len(n3)})")
    ref = n3[f_star]
    shifted = [(v - ref) % n_3 for v in n3]
    m = len(n3)
    return tuple(shifted[(f + f_star) % m] for f in range(m))


def window_bins(params: EType2Params, i15: int) -> list[int]:
    """Allowed remapped bins in window order."""
    if not params.windowed:
        return list(range(params.n_3))
    w = 2 * params.m_v
    if not -w + 1 <= i15 <= 0:
        raise ValueError(f"i15={i15} outside [{-w + 1}, 0]")
    return [(i15 + k) % params.n_3 for k in range(w)]


def i16_value(n3, params: EType2Params, i15: int) -> int:
    """Combinatorial index of the nonzero bins among the window's other slots."""
    slots = [b for b in window_bins(params, i15) if b != 0]
    pos = sorted(slots.index(v) for v in n3 if v != 0)
    return comb_encode(pos, len(slots))


def n3_from_i16(i16: int, params: EType2Params, i15: int) -> tuple[int, ...]:
    slots = [b for b in window_bins(params, i15) if b != 0]
    pos = comb_decode(i16, len(slots), params.m_v - 1)
    return tuple(sorted([0] + [slots[p] for p in pos]))


def i16_range(params: EType2Params) -> int:
    slots = (2 * params.m_v if params.windowed else params.n_3) - 1
    return comb(slots, params.m_v - 1)


def i15_range(params: EType2Params) -> int:
    return 2 * params.m_v if params.windowed else 1


def _validate(pmi: _ETypeReport, params: EType2Params, rank: int, n_psk: int) -> None:
    two_l, m_v = 2 * params.l_beams, params.m_v
    if n_psk not in PSK_SIZES:
        raise ValueError(f"n_psk must be one of {PSK_SIZES}, got {n_psk}")
    if pmi.rank != rank:
        raise ValueError(f"PMI carries {pmi.rank} layers, expected {rank}")
    if not params.windowed and pmi.i15 != 0:
        raise ValueError("i15 must be 0 when n_3 <= 19")
    allowed = set(window_bins(params, pmi.i15))
    for layer in range(rank):
        n3 = pmi.n3[layer]
        if len(n3) != m_v or list(n3) != sorted(set(n3)) or n3[0] != 0:
            raise ValueError(f"layer {layer}: n3 must be {m_v} ascending distinct bins starting at 0")
        if not set(n3) <= allowed:
            raise ValueError(f"layer {layer}: n3 {n3} outside delay window")
        bitmap = pmi.i17[layer]
        if len(bitmap) != two_l * m_v or any(b not in (0, 1) for b in bitmap):
            raise ValueError(f"layer {layer}: bitmap must be {two_l * m_v} bits")
        i_star = pmi.i18[layer]
        if not 0 <= i_star < two_l or not bitmap[i_star * m_v]:
            raise ValueError(f"layer {layer}: strongest beam {i_star} not set in bitmap")
        n_rep = sum(bitmap) - 1
        if len(pmi.i24[layer]) != n_rep or len(pmi.i25[layer]) != n_rep:
            raise ValueError(f"layer {layer}: {n_rep} reported coefficients expected")
        if any(not 0 <= k < 8 for k in pmi.i24[layer]) or any(not 0 <= c < n_psk for c in pmi.i25[layer]):
            raise ValueError(f"layer {layer}: amplitude/phase index out of range")
        ref = pmi.i23[layer]
        if len(ref) != 2 or any(not 0 <= k < 16 for k in ref):
            raise ValueError(f"layer {layer}: reference amplitudes must be two 4-bit values")
        if ref[i_star // params.l_beams] != REF_FULL:
            raise ValueError(f"layer {layer}: strongest polarization reference must be 15")
    if sum(pmi.m_nz) > params.budget(rank):
        raise ValueError(f"M_nz={sum(pmi.m_nz)} exceeds budget {params.budget(rank)}")


def delay_coefficients(pmi: _ETypeReport, params: EType2Params, rank: int, n_psk: int):
    """Per layer dense ``(2L, m_v)`` delay-domain coefficients."""
    _validate(pmi, params, rank, n_psk)
    two_l, m_v = 2 * params.l_beams, params.m_v
    ref_levels = AmpGrid.REF4BIT.levels
    sb_levels = AmpGrid.SB3BIT.levels
    out = []
    for layer in range(rank):
        z = np.zeros(two_l * m_v, dtype=complex)
        i_star = pmi.i18[layer]
        pos = [p for p in np.flatnonzero(pmi.i17[layer]) if p != i_star * m_v]
        z[i_star * m_v] = 1.0
        if pos:
            beam = np.array(pos) // m_v
            p1 = ref_levels[np.array(pmi.i23[layer])[beam // params.l_beams]]
            p2 = sb_levels[list(pmi.i24[layer])]
            z[pos] = p1 * p2 * psk_phases(pmi.i25[layer], n_psk)
        out.append(z.reshape(two_l, m_v))
    return out


def fd_reconstruct(basis: np.ndarray, n3_per_layer, z_per_layer, n_3: int) -> np.ndarray:
    coeffs = np.stack(
        [z @ fd_basis(n_3, n3).T for n3, z in zip(n3_per_layer, z_per_layer)]
    ).transpose(0, 2, 1)
    return mb.reconstruct(basis, coeffs)


def decode_etype2(pmi: PmiEType2, cfg: AntennaConfig, params: EType2Params, rank: int = 1, n_psk: int = 4):
    """Precoder ``(n_3, n_ap, rank)`` with unit-norm columns."""
    _check_rank(rank, params)
    if not (0 <= pmi.q1 < cfg.o1 and 0 <= pmi.q2 < cfg.o2):
        raise ValueError(f"rotation ({pmi.q1}, {pmi.q2}) outside grid")
    basis = mb.dft_beam_matrix(cfg, pmi.q1, pmi.q2, mb.beams_from_i12(cfg, pmi.i12, params.l_beams))
    z = delay_coefficients(pmi, params, rank, n_psk)
    return fd_reconstruct(basis, pmi.n3, z, params.n_3)


def decode_etype2_ps(
    pmi: PmiEType2PS,
    n_ports: int,
    d: int,
    params: EType2Params,
    rank: int = 1,
    n_psk: int = 4,
    port_precoders=None,
):
    _check_rank(rank, params, ps=True)
    ports = mb.selected_ports(pmi.i11, d, params.l_beams, n_ports)
    basis = mb.selection_matrix(ports, n_ports // 2)
    z = delay_coefficients(pmi, params, rank, n_psk)
    return mb.apply_port_precoders(fd_reconstruct(basis, pmi.n3, z, params.n_3), port_precoders)


def _check_rank(rank: int, params: EType2Params, ps: bool = False) -> None:
    if rank not in (1, 2, 3, 4):
        raise ValueError(f"Enhanced Type II supports rank 1..4, got {rank}")
    if ps and params.l_beams not in (2, 4):
        raise ValueError("port-selection variant supports L in {2, 4}")


@dataclass
class DelaySelection:
    """Continuous (unquantized) compressed representation."""

    i15: int
    n3: list[tuple[int, ...]]
    z: list[np.ndarray]  # per layer (2L, m_v), strongest normalized to 1
    bitmap: list[np.ndarray]  # per layer bool (2L, m_v)
    i_star: list[int]


def compress_delay(coeffs: np.ndarray, params: EType2Params, budget: int | None = None) -> DelaySelection:
    """Delay-domain selection for ``(rank, n_3, 2L)`` subband coefficients."""
    rank, n_3, two_l = coeffs.shape
    if n_3 != params.n_3:
        raise ValueError(f"coefficients span {n_3} subbands, params expect {params.n_3}")
    m_v = params.m_v
    remapped, stars = [], []
    for layer in range(rank):
        y = np.fft.fft(coeffs[layer], axis=0).T / n_3  # (2L, n_3)
        i_star, n_star = np.unravel_index(first_argmax(np.abs(y)), y.shape)
        y = np.roll(y, -n_star, axis=1)
        ref = y[i_star, 0]
        remapped.append(y / ref if abs(ref) > 0 else y)
        stars.append(int(i_star))
    energy = [np.sum(np.abs(y) ** 2, axis=0) for y in remapped]

    def pick(i15):
        slots = np.array([b for b in window_bins(params, i15) if b != 0], dtype=int)
        chosen, score = [], 0.0
        for e in energy:
            top = slots[top_k_stable(e[slots], m_v - 1)] if m_v > 1 else slots[:0]
            chosen.append(tuple(sorted([0] + [int(b) for b in top])))
            score += float(e[top].sum())
        return chosen, score

    if params.windowed:
        cands = list(range(-2 * m_v + 1, 1))
        picks = [pick(i15) for i15 in cands]
        best = first_argmax(np.array([s for _, s in picks]))
        i15, n3 = cands[best], picks[best][0]
    else:
        i15, n3 = 0, pick(0)[0]

    z = [y[:, list(b)] for y, b in zip(remapped, n3)]
    k_total = params.budget(rank) if budget is None else budget
    mags = np.concatenate([np.abs(zl).ravel() for zl in z])
    forced = np.array([layer * two_l * m_v + stars[layer] * m_v for layer in range(rank)])
    mags_rest = mags.copy()
    mags_rest[forced] = -1.0
    keep = set(forced.tolist())
    keep.update(int(i) for i in top_k_stable(mags_rest, max(0, k_total - rank)))
    flat = np.zeros(len(mags), dtype=bool)
    flat[list(keep)] = True
    bitmaps = [flat[layer * two_l * m_v:(layer + 1) * two_l * m_v].reshape(two_l, m_v) for layer in range(rank)]
    return DelaySelection(i15=i15, n3=n3, z=z, bitmap=bitmaps, i_star=stars)


def quantize_selection(sel: DelaySelection, l_beams: int, n_psk: int) -> dict:
    i17, i23, i24, i25 = [], [], [], []
    ref_levels = AmpGrid.REF4BIT.levels
    for z, bitmap, i_star in zip(sel.z, sel.bitmap, sel.i_star):
        two_l, m_v = z.shape
        star_pol = i_star // l_beams
        ref = []
        for pol in range(2):
            block = np.abs(z[pol * l_beams:(pol + 1) * l_beams]) * bitmap[pol * l_beams:(pol + 1) * l_beams]
            ref.append(REF_FULL if pol == star_pol else quantize_amp(float(block.max(initial=0.0)), AmpGrid.REF4BIT))
        flat_z = z.ravel()
        pos = [p for p in np.flatnonzero(bitmap.ravel()) if p != i_star * m_v]
        p1 = ref_levels[np.array(ref)[np.array(pos, dtype=int) // m_v // l_beams]] if pos else np.zeros(0)
        amp = np.abs(flat_z[pos])
        ratio = np.divide(amp, p1, out=np.zeros_like(amp), where=p1 > 0)
        k2 = quantize_amp(np.minimum(ratio, 1.0), AmpGrid.SB3BIT) if pos else np.zeros(0, dtype=int)
        c = quantize_phase(flat_z[pos], n_psk) if pos else np.zeros(0, dtype=int)
        i17.append(tuple(int(b) for b in bitmap.ravel()))
        i23.append(tuple(int(v) for v in ref))
        i24.append(tuple(int(v) for v in k2))
        i25.append(tuple(int(v) for v in c))
    return dict(
        i15=sel.i15,
        n3=tuple(tuple(b) for b in sel.n3),
        i17=tuple(i17),
        i18=tuple(sel.i_star),
        i23=tuple(i23),
        i24=tuple(i24),
        i25=tuple(i25),
    )


def etype2_unquantized(channel, cfg: AntennaConfig, params: EType2Params, rank: int = 1, budget: int | None = None):
    """Beam choice, basis and delay selection before scalar quantization."""
    h = as_tensor(channel)
    check_ports(h, cfg.n_ap)
    targets = target_precoders(h, rank)
    q1, q2, beams = mb.select_dft_beams(cfg, targets, params.l_beams)
    basis = mb.dft_beam_matrix(cfg, q1, q2, beams)
    sel = compress_delay(mb.beam_coefficients(targets, basis), params, budget)
    return (q1, q2, beams), basis, sel


def selection_precoder(basis: np.ndarray, sel: DelaySelection, n_3: int) -> np.ndarray:
    """Reconstruction from unquantized retained coefficients."""
    return fd_reconstruct(basis, sel.n3, [z * b for z, b in zip(sel.z, sel.bitmap)], n_3)


def encode_etype2(channel, cfg: AntennaConfig, params: EType2Params, rank: int = 1, n_psk: int = 4) -> PmiEType2:
    _check_rank(rank, params)
    (q1, q2, beams), _, sel = etype2_unquantized(channel, cfg, params, rank)
    return PmiEType2(q1=q1, q2=q2, i12=mb.i12_from_beams(cfg, beams), **quantize_selection(sel, params.l_beams, n_psk))


def etype2_ps_unquantized(effective_channel, d: int, params: EType2Params, rank: int = 1, budget: int | None = None):
    h = as_tensor(effective_channel)
    targets = target_precoders(h, rank)
    i11 = mb.select_port_group(targets, d, params.l_beams)
    ports = mb.selected_ports(i11, d, params.l_beams, h.shape[1])
    basis = mb.selection_matrix(ports, h.shape[1] // 2)
    sel = compress_delay(mb.beam_coefficients(targets, basis), params, budget)
    return i11, basis, sel


def encode_etype2_ps(effective_channel, d: int, params: EType2Params, rank: int = 1, n_psk: int = 4) -> PmiEType2PS:
    _check_rank(rank, params, ps=True)
    i11, _, sel = etype2_ps_unquantized(effective_channel, d, params, rank)
    return PmiEType2PS(i11=i11, **quantize_selection(sel, params.l_beams, n_psk))
