"""Further Enhanced Type II port selection.

The gNB forms wideband spatial-frequency port precoders from the uplink
channel (angles and delays are reciprocal even when phases are not).  Each
precoder drives one beamformed CSI-RS port per polarization across all
subbands, so the UE only picks ``k_ports`` ports and reports a few
coefficients on ``m`` layer-common delay bins.

Port precoders are stored as ``(n_3, n_elem, n_pp)``: column ``p`` at
subband ``t`` is the antenna weight of port ``p`` on that subband.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import floor

import numpy as np

from . import multibeam as mb
from .beamgrid import AntennaConfig, beam_grid
from .linalg import as_tensor, first_argmax, target_precoders, top_k_stable
from .quantizers import PSK_SIZES, AmpGrid, comb_decode, comb_encode, psk_phases, quantize_amp, quantize_phase

MAX_PORTS = 6


class PortPrecoderMode(enum.Enum):
    DFT_BASED = "dft"
    EIGEN_BASED = "eigen"


@dataclass(frozen=True)
class FeParams:
    alpha: Fraction = Fraction(1, 2)
    n_ap: int = 16  # beamformed CSI-RS ports over both polarizations
    m: int = 1
    n_big: int = 2
    beta: Fraction = Fraction(1, 2)  # bitmap budget fraction, used for rank > 2
    n_3: int = 13

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha).limit_denominator(64))
        object.__setattr__(self, "beta", Fraction(self.beta).limit_denominator(64))
        if self.n_ap < 2 or self.n_ap % 2:
            raise ValueError(f"n_ap must be even and >= 2, got {self.n_ap}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        k = self.alpha * self.n_ap / 2
        if k.denominator != 1:
            raise ValueError(f"alpha * n_ap / 2 = {k} is not an integer")
        if not 1 <= k <= MAX_PORTS:
            raise ValueError(f"k_ports={k} outside [1, {MAX_PORTS}]")
        if self.m not in (1, 2):
            raise ValueError(f"m must be 1 or 2, got {self.m}")
        if self.n_big not in (2, 4):
            raise ValueError(f"N must be 2 or 4, got {self.n_big}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if self.n_3 < self.n_big:
            raise ValueError(f"n_3={self.n_3} smaller than N={self.n_big}")

    @property
    def k_ports(self) -> int:
        return int(self.alpha * self.n_ap / 2)

    @property
    def n_pp(self) -> int:
        return self.n_ap // 2

    @property
    def i16_range(self) -> int:
        return self.n_big - 1 if (self.n_big == 4 and self.m == 2) else 1

    def n3_bins(self, i16: int) -> tuple[int, ...]:
        if not 0 <= i16 < self.i16_range:
            raise ValueError(f"i16={i16} outside [0, {self.i16_range})")
        return (0,) if self.m == 1 else (0, i16 + 1)

    def budget(self, rank: int) -> int:
        """Bitmap ones over all layers; every coefficient for rank <= 2."""
        full = 2 * self.k_ports * self.m
        if rank <= 2:
            return full * rank
        return max(rank, floor(full * rank * self.beta))


@dataclass(frozen=True)
class PmiFeType2PS:
    port_choice: int
    i16: int
    bitmap: tuple[tuple[int, ...], ...]
    amp: tuple[tuple[int, ...], ...]
    phase: tuple[tuple[int, ...], ...]

    @property
    def rank(self) -> int:
        return len(self.bitmap)

    @property
    def m_nz(self) -> tuple[int, ...]:
        return tuple(sum(b) for b in self.bitmap)


def _ul_samples(ul_channel) -> np.ndarray:
    """Concatenate UL snapshots along the receive axis."""
    if isinstance(ul_channel, (list, tuple)):
        hs = [as_tensor(c) for c in ul_channel]
    else:
        hs = [as_tensor(ul_channel)]
    return np.concatenate(hs, axis=0)


def gnb_port_precoders(
    ul_channel,
    cfg: AntennaConfig,
    k_ports: int,
    mode: PortPrecoderMode = PortPrecoderMode.EIGEN_BASED,
    delay_oversampling: int = 4,
) -> np.ndarray:
    """Port precoders ``(n_3, n_elem, k_ports)`` from one or more UL snapshots.

    Samples are the conjugated per-polarization UL vectors over
    ``(element, subband)``, so a precoder aligned with a sample maximizes the
    downlink effective-channel gain.  DFT_BASED picks angle-delay bins from
    the oversampled beam grid and a ``delay_oversampling``-times finer delay
    grid, strongest first, removing each chosen bin from the samples before
    the next pick; EIGEN_BASED keeps the top eigenvectors of the sample
    covariance.
    """
    if cfg.ng != 1:
        raise ValueError("port precoding assumes a single panel")
    h = _ul_samples(ul_channel)
    if h.shape[1] != cfg.n_ap:
        raise ValueError(f"UL channel has {h.shape[1]} ports, configuration expects {cfg.n_ap}")
    n3, n = h.shape[2], cfg.n_elem
    if not 1 <= k_ports <= n * n3:
        raise ValueError(f"k_ports={k_ports} exceeds available dimensions {n * n3}")
    # (samples, n_elem, n_3): both polarizations and all rx antennas are samples
    x = h.reshape(-1, 2, n, n3).reshape(-1, n, n3).conj()
    mode = PortPrecoderMode(mode)
    if mode is PortPrecoderMode.EIGEN_BASED:
        flat = x.reshape(x.shape[0], n * n3)
        _, _, vh = np.linalg.svd(flat, full_matrices=True)
        v = vh[:k_ports]  # sample rows lie in the span of these rows
        f = v.reshape(k_ports, n, n3)
    else:
        f = _greedy_angle_delay(x, cfg, k_ports, delay_oversampling)
    # unit-norm joint vectors scaled so each subband carries unit power on average
    return np.ascontiguousarray(f.transpose(2, 1, 0)) * np.sqrt(n3)


def _greedy_angle_delay(x: np.ndarray, cfg: AntennaConfig, k_ports: int, o_d: int) -> np.ndarray:
    """``(k_ports, n_elem, n_3)`` unit-norm angle-delay vectors, greedy with deflation."""
    if o_d < 1:
        raise ValueError("delay oversampling must be >= 1")
    _, n, n3 = x.shape
    grid = beam_grid(cfg) / np.sqrt(n)  # (n_elem, G)
    n_tau = o_d * n3
    phase = np.exp(2j * np.pi * np.outer(np.arange(n3), np.arange(n_tau)) / n_tau) / np.sqrt(n3)  # (t, tau)
    resid = x.copy()
    out = []
    for _ in range(k_ports):
        # |<beam_g (x) phase_tau, resid_s>|^2 summed over samples
        proj = (resid.transpose(0, 2, 1) @ grid.conj()).transpose(0, 2, 1) @ phase.conj()
        energy = (np.abs(proj) ** 2).sum(axis=0)
        g, k = np.unravel_index(first_argmax(energy), energy.shape)
        v = grid[:, g, None] * phase[None, :, k]
        out.append(v)
        coef = resid.reshape(len(resid), -1) @ v.conj().ravel()
        resid = resid - coef[:, None, None] * v[None]
    return np.array(out)


def effective_channel(channel, port_precoders: np.ndarray) -> np.ndarray:
    """Per-port channel ``(n_rx, 2 n_pp, n_3)`` seen on beamformed CSI-RS."""
    return mb.port_channel(as_tensor(channel), port_precoders)


@dataclass
class FeSelection:
    """Unquantized report: chosen ports, bins and per-layer ``(2K, m)`` coefficients."""

    ports: tuple[int, ...]
    n3: tuple[int, ...]
    z: list[np.ndarray]
    bitmap: list[np.ndarray]


def _check_rank(rank: int) -> None:
    if rank not in (1, 2, 3, 4):
        raise ValueError(f"rank must be 1..4, got {rank}")


def fetype2ps_unquantized(effective, params: FeParams, rank: int = 1, budget: int | None = None) -> FeSelection:
    _check_rank(rank)
    h = as_tensor(effective)
    if h.shape[1] != params.n_ap or h.shape[2] != params.n_3:
        raise ValueError(f"effective channel {h.shape} does not match n_ap={params.n_ap}, n_3={params.n_3}")
    targets = target_precoders(h, rank)
    # delay-domain coefficients of every port, (rank, 2, n_pp, n_3)
    y_all = np.fft.fft(mb.split_polarizations(targets), axis=1).transpose(0, 2, 3, 1) / params.n_3
    if params.m == 1:
        n3 = (0,)
    else:
        cands = list(range(1, params.n_big))
        bin_energy = (np.abs(y_all[..., cands]) ** 2).sum(axis=(0, 1, 2))
        n3 = (0, cands[first_argmax(bin_energy)])
    # ports ranked by the energy they carry on the reported bins
    energy = (np.abs(y_all[..., list(n3)]) ** 2).sum(axis=(0, 1, 3))
    ports = tuple(sorted(int(p) for p in top_k_stable(energy, params.k_ports)))
    y = y_all[:, :, list(ports)].reshape(rank, 2 * params.k_ports, params.n_3)
    z = [y[layer][:, list(n3)] for layer in range(rank)]
    bitmaps = _select(z, params.budget(rank) if budget is None else budget)
    return FeSelection(ports=ports, n3=n3, z=z, bitmap=bitmaps)


def _select(z: list[np.ndarray], k_total: int) -> list[np.ndarray]:
    """Keep each layer's strongest coefficient, then the globally strongest
    remaining ones measured relative to their layer's maximum."""
    size = z[0].size
    rel = []
    forced = []
    for layer, zl in enumerate(z):
        a = np.abs(zl).ravel()
        star = first_argmax(a) if a.max() > 0 else 0
        rel.append(a / a[star] if a[star] > 0 else a)
        forced.append(layer * size + star)
    mags = np.concatenate(rel)
    mags[forced] = -1.0
    keep = set(forced)
    keep.update(int(i) for i in top_k_stable(mags, max(0, k_total - len(z))))
    flat = np.zeros(mags.size, dtype=bool)
    flat[list(keep)] = True
    return [flat[i * size:(i + 1) * size].reshape(z[0].shape) for i in range(len(z))]


def quantize_fe(sel: FeSelection, params: FeParams, n_psk: int) -> PmiFeType2PS:
    if n_psk not in PSK_SIZES:
        raise ValueError(f"n_psk must be one of {PSK_SIZES}, got {n_psk}")
    amps, phases = [], []
    for z, bitmap in zip(sel.z, sel.bitmap):
        flat = z.ravel()
        star = first_argmax(np.abs(flat)) if np.abs(flat).max() > 0 else 0
        ref = flat[star] if abs(flat[star]) > 0 else 1.0
        ratio = flat / ref
        pos = np.flatnonzero(bitmap.ravel())
        amps.append(tuple(int(k) for k in quantize_amp(np.minimum(np.abs(ratio[pos]), 1.0), AmpGrid.SB3BIT)))
        phases.append(tuple(int(c) for c in quantize_phase(ratio[pos], n_psk)))
    i16 = sel.n3[1] - 1 if params.i16_range > 1 else 0
    return PmiFeType2PS(
        port_choice=comb_encode(sel.ports, params.n_pp),
        i16=i16,
        bitmap=tuple(tuple(int(b) for b in bm.ravel()) for bm in sel.bitmap),
        amp=tuple(amps),
        phase=tuple(phases),
    )


def encode_fetype2ps(effective, params: FeParams, rank: int = 1, n_psk: int = 8) -> PmiFeType2PS:
    """Encode from the per-port channel measured on beamformed CSI-RS."""
    return quantize_fe(fetype2ps_unquantized(effective, params, rank), params, n_psk)


def validate_fe(pmi: PmiFeType2PS, params: FeParams, rank: int, n_psk: int) -> None:
    _check_rank(rank)
    if n_psk not in PSK_SIZES:
        raise ValueError(f"n_psk must be one of {PSK_SIZES}, got {n_psk}")
    if pmi.rank != rank:
        raise ValueError(f"PMI carries {pmi.rank} layers, expected {rank}")
    comb_decode(pmi.port_choice, params.n_pp, params.k_ports)
    params.n3_bins(pmi.i16)
    size = 2 * params.k_ports * params.m
    for layer in range(rank):
        bm = pmi.bitmap[layer]
        if len(bm) != size or any(b not in (0, 1) for b in bm):
            raise ValueError(f"layer {layer}: bitmap must be {size} bits")
        if rank <= 2 and sum(bm) != size:
            raise ValueError("rank <= 2 reports every coefficient")
        if sum(bm) < 1:
            raise ValueError(f"layer {layer}: empty bitmap")
        if len(pmi.amp[layer]) != sum(bm) or len(pmi.phase[layer]) != sum(bm):
            raise ValueError(f"layer {layer}: amplitude/phase count must equal bitmap weight")
        if any(not 0 <= k < 8 for k in pmi.amp[layer]) or any(not 0 <= c < n_psk for c in pmi.phase[layer]):
            raise ValueError(f"layer {layer}: amplitude/phase index out of range")
    if sum(pmi.m_nz) > params.budget(rank):
        raise ValueError(f"M_nz={sum(pmi.m_nz)} exceeds budget {params.budget(rank)}")


def fe_coefficients(pmi: PmiFeType2PS, params: FeParams, rank: int, n_psk: int) -> list[np.ndarray]:
    validate_fe(pmi, params, rank, n_psk)
    out = []
    for layer in range(rank):
        z = np.zeros(2 * params.k_ports * params.m, dtype=complex)
        pos = np.flatnonzero(pmi.bitmap[layer])
        z[pos] = AmpGrid.SB3BIT.levels[list(pmi.amp[layer])] * psk_phases(pmi.phase[layer], n_psk)
        out.append(z.reshape(2 * params.k_ports, params.m))
    return out


def port_domain_precoder(ports, n3_bins, z, params: FeParams) -> np.ndarray:
    from .etype2 import fd_reconstruct

    basis = mb.selection_matrix(ports, params.n_pp)
    return fd_reconstruct(basis, [n3_bins] * len(z), z, params.n_3)


def decode_fetype2ps(
    pmi: PmiFeType2PS,
    port_precoders,
    params: FeParams,
    rank: int = 1,
    n_psk: int = 8,
) -> np.ndarray:
    """Antenna-domain precoder ``(n_3, 2 n_elem, rank)``.

    ``port_precoders=None`` returns the port-domain precoder.
    """
    z = fe_coefficients(pmi, params, rank, n_psk)
    ports = comb_decode(pmi.port_choice, params.n_pp, params.k_ports)
    if port_precoders is not None:
        f = np.asarray(port_precoders)
        if f.shape[-1] <= max(ports):
            raise ValueError(f"port {max(ports)} not among the {f.shape[-1]} transmitted ports")
        if f.shape[-1] != params.n_pp:
            raise ValueError(f"expected {params.n_pp} port precoders, got {f.shape[-1]}")
    w = port_domain_precoder(ports, params.n3_bins(pmi.i16), z, params)
    return mb.apply_port_precoders(w, port_precoders)


def captured_energy(ul_channel, port_precoders: np.ndarray) -> float:
    """Fraction of per-polarization joint (element, subband) channel energy
    inside the span of the port precoders."""
    h = _ul_samples(ul_channel)
    f = np.asarray(port_precoders)
    n3, n, k = f.shape
    x = h.reshape(-1, 2, n, n3).reshape(-1, n, n3).conj().reshape(-1, n * n3)
    basis = f.transpose(2, 1, 0).reshape(k, n * n3).T
    q, _ = np.linalg.qr(basis)
    total = np.sum(np.abs(x) ** 2)
    return float(np.sum(np.abs(x @ q.conj()) ** 2) / total) if total > 0 else 0.0
