"""Type II codebook and its port-selection variant.

Reconstruction convention: the strongest coefficient of each layer
(``i13``) is not transmitted and is rebuilt as wideband index 7, phase 0,
subband amplitude 1.  With subband amplitudes on (``i_s=1``) the
``ceil(m_nz / 2)`` strongest remaining coefficients carry a 1-bit subband
amplitude and ``n_psk`` phases; the rest use 4-PSK phases only.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from . import multibeam as mb
from .beamgrid import AntennaConfig
from .linalg import as_tensor, check_ports, first_argmax, target_precoders
from .quantizers import AmpGrid, psk_phases, quantize_amp, quantize_phase

WB_FULL = 7


@dataclass(frozen=True, kw_only=True)
class _Type2Report:
    i13: tuple[int, ...]
    i14: tuple[tuple[int, ...], ...]
    i21: tuple[tuple[tuple[int, ...], ...], ...]
    i22: tuple[tuple[tuple[int, ...], ...], ...] | None = None

    @property
    def rank(self) -> int:
        return len(self.i13)

    @property
    def n_3(self) -> int:
        return len(self.i21[0])


@dataclass(frozen=True, kw_only=True)
class PmiType2(_Type2Report):
    q1: int
    q2: int
    i12: int


@dataclass(frozen=True, kw_only=True)
class PmiType2PS(_Type2Report):
    i11: int


@dataclass(frozen=True)
class CompressedReport:
    m_nz: tuple[int, ...]
    m_vr: tuple[int, ...]
    omitted: frozenset

    @property
    def total_nz(self) -> int:
        return sum(self.m_nz)


def check_params(rank: int, n_beams: int, i_s: int, n_psk: int) -> None:
    if rank not in (1, 2):
        raise ValueError(f"Type II supports rank 1 or 2, got {rank}")
    if n_beams not in (2, 3, 4):
        raise ValueError(f"L must be 2, 3 or 4, got {n_beams}")
    if i_s not in (0, 1):
        raise ValueError(f"i_s must be 0 or 1, got {i_s}")
    if n_psk not in (4, 8):
        raise ValueError(f"Type II n_psk must be 4 or 8, got {n_psk}")


def coefficient_tiers(k1: tuple[int, ...], i_star: int, i_s: int):
    """Split reported positions into ``(strong, weak)`` index tuples.

    Ordering is by wideband amplitude (descending), ties to the lower index.
    Without subband amplitudes every reported position is strong.
    """
    reported = [i for i, k in enumerate(k1) if k > 0 and i != i_star]
    reported.sort(key=lambda i: (-k1[i], i))
    m_vr = ceil(len(reported) / 2) if i_s else len(reported)
    return tuple(sorted(reported[:m_vr])), tuple(sorted(reported[m_vr:]))


def compressed_report(pmi: _Type2Report, i_s: int) -> CompressedReport:
    m_nz, m_vr, omitted = [], [], set()
    for layer, (i_star, k1) in enumerate(zip(pmi.i13, pmi.i14)):
        strong, weak = coefficient_tiers(k1, i_star, i_s)
        m_nz.append(len(strong) + len(weak))
        m_vr.append(len(strong))
        omitted.add((layer, i_star))
        omitted.update((layer, i) for i, k in enumerate(k1) if k == 0)
    return CompressedReport(tuple(m_nz), tuple(m_vr), frozenset(omitted))


def phase_resolution(k1, i_star, i_s, n_psk) -> np.ndarray:
    res = np.full(len(k1), n_psk)
    _, weak = coefficient_tiers(k1, i_star, i_s)
    res[list(weak)] = 4
    return res


def validate_report(pmi: _Type2Report, n_beams: int, i_s: int, n_psk: int) -> None:
    two_l = 2 * n_beams
    n3 = pmi.n_3
    if not (len(pmi.i14) == len(pmi.i21) == pmi.rank):
        raise ValueError("per-layer field lengths disagree")
    for layer in range(pmi.rank):
        i_star, k1 = pmi.i13[layer], pmi.i14[layer]
        if not 0 <= i_star < two_l:
            raise ValueError(f"i13={i_star} outside [0, {two_l})")
        if len(k1) != two_l or any(not 0 <= k <= 7 for k in k1):
            raise ValueError(f"i14 layer {layer} must hold {two_l} values in 0..7")
        if k1[i_star] != WB_FULL:
            raise ValueError("strongest coefficient must have wideband index 7")
        res = phase_resolution(k1, i_star, i_s, n_psk)
        if len(pmi.i21[layer]) != n3:
            raise ValueError("i21 subband count mismatch")
        for t in range(n3):
            c = pmi.i21[layer][t]
            if len(c) != two_l or any(not 0 <= c[i] < res[i] for i in range(two_l)):
                raise ValueError(f"i21 layer {layer} subband {t} out of range: {c}")
            if i_s:
                k2 = pmi.i22[layer][t]
                if len(k2) != two_l or any(v not in (0, 1) for v in k2):
                    raise ValueError(f"i22 layer {layer} subband {t} out of range: {k2}")
    if i_s and pmi.i22 is None:
        raise ValueError("i_s=1 requires i22")


def report_coefficients(pmi: _Type2Report, n_beams: int, i_s: int, n_psk: int) -> np.ndarray:
    """Complex coefficients ``(rank, n_3, 2L)`` implied by a report."""
    validate_report(pmi, n_beams, i_s, n_psk)
    wb_levels = AmpGrid.WB3BIT.levels
    sb_levels = AmpGrid.SB1BIT.levels
    out = np.zeros((pmi.rank, pmi.n_3, 2 * n_beams), dtype=complex)
    for layer in range(pmi.rank):
        k1 = pmi.i14[layer]
        i_star = pmi.i13[layer]
        res = phase_resolution(k1, i_star, i_s, n_psk)
        strong, _ = coefficient_tiers(k1, i_star, i_s)
        p1 = wb_levels[list(k1)]
        c = np.array(pmi.i21[layer])
        p2 = np.ones_like(c, dtype=float)
        if i_s:
            k2 = np.array(pmi.i22[layer])
            p2[:, list(strong)] = sb_levels[k2[:, list(strong)]]
        out[layer] = p1 * p2 * psk_phases(c, res)
    return out


def quantize_layers(coeffs: np.ndarray, i_s: int, n_psk: int):
    """Quantize ``(rank, n_3, 2L)`` coefficients into report fields."""
    rank, n3, two_l = coeffs.shape
    i13, i14, i21, i22 = [], [], [], []
    for layer in range(rank):
        x = coeffs[layer]
        rms = np.sqrt(np.mean(np.abs(x) ** 2, axis=0))
        i_star = first_argmax(rms)
        scale = rms[i_star] if rms[i_star] > 0 else 1.0
        k1 = quantize_amp(rms / scale, AmpGrid.WB3BIT)
        k1[i_star] = WB_FULL
        k1 = tuple(int(k) for k in k1)
        ref = x[:, i_star]
        ref = np.where(np.abs(ref) > 0, ref, 1.0)
        ratio = x / ref[:, None]
        res = phase_resolution(k1, i_star, i_s, n_psk)
        c = quantize_phase(ratio, res)
        mask = np.array([k > 0 and i != i_star for i, k in enumerate(k1)])
        c[:, ~mask] = 0
        i13.append(i_star)
        i14.append(k1)
        i21.append(tuple(tuple(int(v) for v in row) for row in c))
        if i_s:
            strong, _ = coefficient_tiers(k1, i_star, i_s)
            p1 = AmpGrid.WB3BIT.levels[list(k1)]
            k2 = np.ones(c.shape, dtype=np.int64)
            if strong:
                s = list(strong)
                k2[:, s] = quantize_amp(np.abs(ratio[:, s]) / p1[s], AmpGrid.SB1BIT)
            i22.append(tuple(tuple(int(v) for v in row) for row in k2))
    return dict(
        i13=tuple(i13),
        i14=tuple(i14),
        i21=tuple(i21),
        i22=tuple(i22) if i_s else None,
    )


def type2_basis(cfg: AntennaConfig, pmi: PmiType2, n_beams: int) -> np.ndarray:
    beams = mb.beams_from_i12(cfg, pmi.i12, n_beams)
    return mb.dft_beam_matrix(cfg, pmi.q1, pmi.q2, beams)


def decode_type2(
    pmi: PmiType2,
    cfg: AntennaConfig,
    rank: int = 1,
    n_beams: int = 4,
    i_s: int = 0,
    n_psk: int = 8,
    n_3: int | None = None,
) -> np.ndarray:
    """Precoder ``(n_3, n_ap, rank)`` with unit-norm columns."""
    check_params(rank, n_beams, i_s, n_psk)
    if pmi.rank != rank or (n_3 is not None and pmi.n_3 != n_3):
        raise ValueError("PMI shape does not match (rank, n_3)")
    if not (0 <= pmi.q1 < cfg.o1 and 0 <= pmi.q2 < cfg.o2):
        raise ValueError(f"rotation ({pmi.q1}, {pmi.q2}) outside grid")
    basis = type2_basis(cfg, pmi, n_beams)
    return mb.reconstruct(basis, report_coefficients(pmi, n_beams, i_s, n_psk))


def type2_unquantized(channel, cfg: AntennaConfig, rank: int = 1, n_beams: int = 4):
    """Beam choice and continuous coefficients before quantization.

    Returns ``(basis, coeffs)``; ``mb.reconstruct(basis, coeffs)`` is the
    projection of the layer targets onto the selected beams.
    """
    h = as_tensor(channel)
    check_ports(h, cfg.n_ap)
    targets = target_precoders(h, rank)
    q1, q2, beams = mb.select_dft_beams(cfg, targets, n_beams)
    basis = mb.dft_beam_matrix(cfg, q1, q2, beams)
    return (q1, q2, beams), basis, mb.beam_coefficients(targets, basis)


def encode_type2(
    channel,
    cfg: AntennaConfig,
    rank: int = 1,
    n_beams: int = 4,
    i_s: int = 0,
    n_psk: int = 8,
) -> tuple[PmiType2, CompressedReport]:
    check_params(rank, n_beams, i_s, n_psk)
    (q1, q2, beams), _, coeffs = type2_unquantized(channel, cfg, rank, n_beams)
    pmi = PmiType2(q1=q1, q2=q2, i12=mb.i12_from_beams(cfg, beams), **quantize_layers(coeffs, i_s, n_psk))
    return pmi, compressed_report(pmi, i_s)


def decode_type2_ps(
    pmi: PmiType2PS,
    n_ports: int,
    d: int,
    rank: int = 1,
    n_beams: int = 4,
    i_s: int = 0,
    n_psk: int = 8,
    port_precoders=None,
) -> np.ndarray:
    """Port-domain precoder ``(n_3, n_ports, rank)``, or antenna-domain when
    ``port_precoders`` (the beams behind each CSI-RS port) are given."""
    check_params(rank, n_beams, i_s, n_psk)
    ports = mb.selected_ports(pmi.i11, d, n_beams, n_ports)
    basis = mb.selection_matrix(ports, n_ports // 2)
    w = mb.reconstruct(basis, report_coefficients(pmi, n_beams, i_s, n_psk))
    return mb.apply_port_precoders(w, port_precoders)


def type2_ps_unquantized(effective_channel, d: int, rank: int = 1, n_beams: int = 4):
    h = as_tensor(effective_channel)
    targets = target_precoders(h, rank)
    i11 = mb.select_port_group(targets, d, n_beams)
    ports = mb.selected_ports(i11, d, n_beams, h.shape[1])
    basis = mb.selection_matrix(ports, h.shape[1] // 2)
    return i11, basis, mb.beam_coefficients(targets, basis)


def encode_type2_ps(
    effective_channel,
    d: int,
    rank: int = 1,
    n_beams: int = 4,
    i_s: int = 0,
    n_psk: int = 8,
) -> tuple[PmiType2PS, CompressedReport]:
    """Encode from the per-port channel the UE measures on beamformed CSI-RS."""
    check_params(rank, n_beams, i_s, n_psk)
    i11, _, coeffs = type2_ps_unquantized(effective_channel, d, rank, n_beams)
    pmi = PmiType2PS(i11=i11, **quantize_layers(coeffs, i_s, n_psk))
    return pmi, compressed_report(pmi, i_s)
