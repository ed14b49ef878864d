"""Beam/port selection and reconstruction shared by the multi-beam codebooks."""
from __future__ import annotations

from math import ceil

import numpy as np

from .beamgrid import AntennaConfig, beam_grid, rotation_beam_indices, rotation_beams, rotation_hypotheses
from .linalg import first_argmax, normalize_columns, top_k_stable
from .quantizers import comb_decode, comb_encode


def split_polarizations(targets: np.ndarray) -> np.ndarray:
    """``(n_3, 2n, rank)`` -> ``(rank, n_3, 2, n)``."""
    n3, n_ap, rank = targets.shape
    return targets.reshape(n3, 2, n_ap // 2, rank).transpose(3, 0, 1, 2)


def select_dft_beams(cfg: AntennaConfig, targets: np.ndarray, n_beams: int):
    """Best rotation and its ``n_beams`` strongest orthogonal beams.

    Beams of one rotation are orthogonal, so subset energy is additive and
    taking the top-``n_beams`` per rotation is the exact subset optimum.
    Rotations capturing equal energy are separated by their strongest single
    beam, then by order.  Returns ``(q1, q2, sorted beam indices)``.
    """
    if not 1 <= n_beams <= cfg.n_elem:
        raise ValueError(f"L={n_beams} must be in [1, n1*n2={cfg.n_elem}]")
    pol = split_polarizations(targets)
    proj = np.einsum("eg,ltpe->ltpg", beam_grid(cfg).conj(), pol)
    energy = (np.abs(proj) ** 2).sum(axis=(0, 1, 2))
    g2 = cfg.grid_shape[1]
    scores, peaks, choices = [], [], []
    for q1, q2 in rotation_hypotheses(cfg):
        idx = [m1 * g2 + m2 for m1, m2 in rotation_beam_indices(cfg, q1, q2)]
        e = energy[idx]
        top = top_k_stable(e, n_beams)
        scores.append(e[top].sum())
        peaks.append(e[top[0]])
        choices.append((q1, q2, tuple(sorted(int(b) for b in top))))
    scores = np.array(scores)
    tied = np.flatnonzero(scores >= scores[first_argmax(scores)] - 1e-9 * scores.max())
    best = tied[first_argmax(np.array(peaks)[tied])]
    return choices[best]


def dft_beam_matrix(cfg: AntennaConfig, q1: int, q2: int, beams) -> np.ndarray:
    return rotation_beams(cfg, q1, q2)[:, list(beams)]


def beams_from_i12(cfg: AntennaConfig, i12: int, n_beams: int) -> tuple[int, ...]:
    return comb_decode(i12, cfg.n_elem, n_beams)


def i12_from_beams(cfg: AntennaConfig, beams) -> int:
    return comb_encode(sorted(beams), cfg.n_elem)


def port_group_count(n_ports: int, d: int) -> int:
    """Number of port-sampling groups per polarization, ``ceil(n_ports / (2d))``."""
    return ceil(n_ports / (2 * d))


def selected_ports(i11: int, d: int, n_beams: int, n_ports: int) -> tuple[int, ...]:
    if d not in (1, 2, 3, 4):
        raise ValueError(f"port sampling d must be in 1..4, got {d}")
    if not 0 <= i11 < port_group_count(n_ports, d):
        raise ValueError(f"i11={i11} outside [0, {port_group_count(n_ports, d)})")
    ports = tuple(i11 * d + i for i in range(n_beams))
    if ports[-1] >= n_ports // 2:
        raise ValueError(f"port {ports[-1]} >= n_ports/2={n_ports // 2} for i11={i11}, d={d}")
    return ports


def selection_matrix(ports, n_per_pol: int) -> np.ndarray:
    sel = np.zeros((n_per_pol, len(ports)))
    for i, q in enumerate(ports):
        sel[q, i] = 1.0
    return sel


def select_port_group(targets: np.ndarray, d: int, n_beams: int) -> int:
    """Port group with the largest total energy over its ports."""
    n_ports = targets.shape[1]
    energy = (np.abs(split_polarizations(targets)) ** 2).sum(axis=(0, 1, 2))
    scores = []
    groups = []
    for i11 in range(port_group_count(n_ports, d)):
        try:
            ports = selected_ports(i11, d, n_beams, n_ports)
        except ValueError:
            continue
        groups.append(i11)
        scores.append(energy[list(ports)].sum())
    if not groups:
        raise ValueError(f"no valid port group for d={d}, L={n_beams}, n_ports={n_ports}")
    return groups[first_argmax(np.array(scores))]


def beam_coefficients(targets: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Least-squares coefficients on ``blkdiag(B, B)``, shape ``(rank, n_3, 2L)``."""
    pol = split_polarizations(targets)
    rhs = np.einsum("ei,ltpe->ltpi", basis.conj(), pol)
    x = np.linalg.solve(basis.conj().T @ basis, rhs[..., None])[..., 0]
    rank, n3 = x.shape[:2]
    return x.reshape(rank, n3, -1)


def reconstruct(basis: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """``blkdiag(B, B) @ coeffs`` per layer/subband, unit-norm columns.

    ``coeffs`` is ``(rank, n_3, 2L)``; the result is ``(n_3, 2n, rank)``.
    """
    n_beams = basis.shape[1]
    upper = np.einsum("ei,lti->tel", basis, coeffs[..., :n_beams])
    lower = np.einsum("ei,lti->tel", basis, coeffs[..., n_beams:])
    return normalize_columns(np.concatenate([upper, lower], axis=1))


def apply_port_precoders(port_domain: np.ndarray, port_precoders) -> np.ndarray:
    """Map a port-domain precoder ``(n_3, n_ports, rank)`` to antennas.

    ``port_precoders`` is ``(n_elem, n_ports/2)`` or per subband
    ``(n_3, n_elem, n_ports/2)``; the same per-polarization precoders feed both
    polarizations.
    """
    if port_precoders is None:
        return port_domain
    f = np.asarray(port_precoders)
    n3 = port_domain.shape[0]
    if f.ndim == 2:
        f = np.broadcast_to(f, (n3,) + f.shape)
    half = port_domain.shape[1] // 2
    if f.shape[-1] != half:
        raise ValueError(f"port precoders cover {f.shape[-1]} ports per polarization, need {half}")
    upper = np.einsum("tep,tpl->tel", f, port_domain[:, :half])
    lower = np.einsum("tep,tpl->tel", f, port_domain[:, half:])
    return normalize_columns(np.concatenate([upper, lower], axis=1))


def port_channel(channel: np.ndarray, port_precoders) -> np.ndarray:
    """Per-port channel ``(n_rx, 2 n_pp, n_3)`` seen on beamformed CSI-RS.

    ``port_precoders`` follows :func:`apply_port_precoders`.
    """
    h = np.asarray(channel)
    n_rx, n_ap, n3 = h.shape
    f = np.asarray(port_precoders)
    if f.ndim == 2:
        f = np.broadcast_to(f, (n3,) + f.shape)
    if f.shape[0] != n3 or 2 * f.shape[1] != n_ap:
        raise ValueError(f"channel {h.shape} incompatible with port precoders {f.shape}")
    pol = h.reshape(n_rx, 2, n_ap // 2, n3)
    return np.einsum("rpet,tek->rpkt", pol, f).reshape(n_rx, -1, n3)
