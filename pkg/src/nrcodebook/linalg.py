"""Small linear-algebra helpers shared by the encoders and the simulator."""
from __future__ import annotations

import numpy as np

TIE_RTOL = 1e-12


def as_tensor(channel) -> np.ndarray:
    """Channel tensor ``(n_rx, n_ap, n_3)`` from an array or a ChannelRealization."""
    h = getattr(channel, "h", channel)
    h = np.asarray(h, dtype=complex)
    if h.ndim == 2:
        h = h[None]
    if h.ndim != 3:
        raise ValueError(f"channel must be (n_rx, n_ap, n_3), got shape {h.shape}")
    return h


def check_ports(h: np.ndarray, n_ap: int) -> None:
    if h.shape[1] != n_ap:
        raise ValueError(f"channel has {h.shape[1]} ports, configuration expects {n_ap}")


def rx_combiners(h: np.ndarray, rank: int) -> np.ndarray:
    """Top-``rank`` eigenvectors of the wideband receive covariance, ``(n_rx, rank)``."""
    n_rx = h.shape[0]
    if rank > n_rx:
        raise ValueError(f"rank {rank} exceeds receive antennas {n_rx}")
    cov = np.einsum("rat,sat->rs", h, h.conj())
    _, vecs = np.linalg.eigh(cov)
    return vecs[:, ::-1][:, :rank]


def target_precoders(h: np.ndarray, rank: int = 1) -> np.ndarray:
    """Per-subband layer targets ``H_t^H u_l``, shape ``(n_3, n_ap, rank)``.

    A fixed wideband receive combiner keeps the targets linear in the
    channel, so the delay structure across subbands survives.
    """
    h = as_tensor(h)
    u = rx_combiners(h, rank)
    return np.einsum("rat,rl->tal", h.conj(), u)


def normalize_columns(w: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(w, axis=-2, keepdims=True)
    return w / np.where(nrm > 0, nrm, 1.0)


def precoder_nmse(w_hat: np.ndarray, w_ref: np.ndarray) -> float:
    """Mean phase-aligned squared error between unit-normalized columns."""
    a = normalize_columns(np.asarray(w_hat))
    b = normalize_columns(np.asarray(w_ref))
    inner = np.abs(np.sum(a.conj() * b, axis=-2))
    return float(np.mean(2.0 - 2.0 * np.minimum(inner, 1.0)))


def first_argmax(values: np.ndarray, rtol: float = TIE_RTOL) -> int:
    """Index of the first entry within ``rtol`` of the maximum (flattened order)."""
    flat = np.ravel(values)
    top = flat.max()
    thresh = top - rtol * max(abs(top), np.finfo(float).tiny)
    return int(np.flatnonzero(flat >= thresh)[0])


def top_k_stable(values: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` largest values, ties to the lower index, in rank order."""
    order = np.lexsort((np.arange(len(values)), -np.asarray(values)))
    return order[:k]
