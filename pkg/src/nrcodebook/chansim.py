"""Drop-based MU-MIMO evaluation of codebooks on geometric channels.

Per drop, every user gets a downlink channel and uplink snapshots sharing
its path angles and delays.  Each scheme turns a user's channel into a
rank-1 precoder per subband (through its codebook), the gNB applies
regularized zero-forcing over the users' reported directions, and the
spectral efficiency is evaluated on the true effective channels
``g_k = u_k^H H_k,t`` with ``u_k`` the user's wideband receive combiner.

Power: total ``P = snr``, noise variance 1, each user's unit-norm beam
gets ``P/K``.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import codebooks as cb
from .beamgrid import AntennaConfig, rotation_beams, rotation_hypotheses
from .channel import ChannelRealization, PathSet, gen_channel, gen_ul_from_dl  # noqa: F401
from .etype2 import EType2Params
from .fetype2ps import FeParams, PortPrecoderMode, gnb_port_precoders
from .linalg import normalize_columns, rx_combiners
from .multibeam import port_channel
from .overhead import CodebookKind

GENIE = "genie"
CSV_FIELDS = (
    "kind", "L", "M_v", "beta", "n_psk", "K", "snr_db", "drops",
    "mean_se", "ci95", "overhead_bits", "indicator_count",
)


@dataclass(frozen=True)
class SchemeSpec:
    """One codebook configuration (or the ideal-CSI genie) in a sweep."""

    kind: str
    label: str | None = None
    n_beams: int = 4
    p_v: Fraction = Fraction(1, 4)
    beta: Fraction = Fraction(1, 2)
    r: int = 1
    n_psk: int = 8
    i_s: int = 0
    d: int = 1
    n_ports: int = 16  # beamformed CSI-RS ports for port-selection kinds
    alpha: Fraction = Fraction(1, 2)
    m: int = 1
    n_big: int = 2
    port_mode: PortPrecoderMode = PortPrecoderMode.EIGEN_BASED

    def __post_init__(self):
        if self.kind != GENIE:
            object.__setattr__(self, "kind", CodebookKind(self.kind).value)
        object.__setattr__(self, "port_mode", PortPrecoderMode(self.port_mode))

    @property
    def name(self) -> str:
        return self.label or self.kind

    def codebook(self, cfg: AntennaConfig, n_3: int) -> cb.Codebook | None:
        k = self.kind
        if k == GENIE:
            return None
        if k == CodebookKind.TYPE1_SP.value:
            return cb.Type1SP(cfg, rank=1, n_3=n_3)
        if k == CodebookKind.TYPE1_MP.value:
            return cb.Type1MP(cfg, rank=1, n_3=n_3)
        if k == CodebookKind.TYPE2.value:
            return cb.Type2(cfg, rank=1, n_beams=self.n_beams, i_s=self.i_s, n_psk=self.n_psk, n_3=n_3)
        if k == CodebookKind.TYPE2_PS.value:
            return cb.Type2PS(self.n_ports, self.d, 1, self.n_beams, self.i_s, self.n_psk, n_3)
        params = EType2Params(l_beams=self.n_beams, p_v=self.p_v, beta=self.beta, r=self.r, n_3=n_3)
        if k == CodebookKind.ETYPE2.value:
            return cb.EType2(cfg, params, rank=1, n_psk=self.n_psk)
        if k == CodebookKind.ETYPE2_PS.value:
            return cb.EType2PS(self.n_ports, self.d, params, rank=1, n_psk=self.n_psk)
        fe = FeParams(alpha=self.alpha, n_ap=self.n_ports, m=self.m, n_big=self.n_big, beta=self.beta, n_3=n_3)
        return cb.FeType2PS(fe, rank=1, n_psk=self.n_psk)

    def m_v(self, n_3: int) -> int | str:
        if self.kind in (CodebookKind.ETYPE2.value, CodebookKind.ETYPE2_PS.value):
            return EType2Params(l_beams=self.n_beams, p_v=self.p_v, beta=self.beta, r=self.r, n_3=n_3).m_v
        if self.kind == CodebookKind.FETYPE2_PS.value:
            return self.m
        return ""

    def l_value(self, n_3: int) -> int | str:
        if self.kind in (GENIE, CodebookKind.TYPE1_SP.value, CodebookKind.TYPE1_MP.value):
            return 1 if self.kind != GENIE else ""
        if self.kind == CodebookKind.FETYPE2_PS.value:
            return int(Fraction(self.alpha) * self.n_ports / 2)
        return self.n_beams


@dataclass(frozen=True)
class SimConfig:
    cfg: AntennaConfig = field(default_factory=lambda: AntennaConfig(8, 2, 4, 4))
    n_rx: int = 2
    n_3: int = 13
    n_users: int = 4
    n_paths: int = 6
    snr_db: float = 10.0
    n_ul: int = 4  # uplink snapshots per user for port precoding

    def __post_init__(self):
        if self.n_users < 1 or self.n_users > self.cfg.n_ap:
            raise ValueError(f"K={self.n_users} must be in [1, n_ap={self.cfg.n_ap}]")
        if self.n_paths < 1 or self.n_rx < 1 or self.n_3 < 1 or self.n_ul < 1:
            raise ValueError("n_paths, n_rx, n_3 and n_ul must be positive")


@dataclass
class SeResult:
    kind: str
    mean_se: float
    ci95: float
    drops: int
    overhead_bits: float
    indicator_count: float
    per_drop: np.ndarray = field(repr=False)
    spec: SchemeSpec | None = field(default=None, repr=False)


@dataclass
class UserDrop:
    dl: ChannelRealization
    ul: list[ChannelRealization]


def draw_users(sim: SimConfig, seed: int, drop: int) -> list[UserDrop]:
    users = []
    for k in range(sim.n_users):
        dl = gen_channel(sim.cfg, sim.n_rx, sim.n_3, seed=[seed, drop, k], n_paths=sim.n_paths)
        ul = [gen_ul_from_dl(dl, seed=[seed, drop, k, 1 + s]) for s in range(sim.n_ul)]
        users.append(UserDrop(dl, ul))
    return users


def effective_rows(h: np.ndarray) -> np.ndarray:
    """Per-subband rank-1 effective channel ``u^H H_t``, shape ``(n_3, n_ap)``."""
    u = rx_combiners(h, 1)[:, 0]
    return np.einsum("r,rat->ta", u.conj(), h)


def dft_port_precoders(ul: Sequence[ChannelRealization], cfg: AntennaConfig, n_pp: int) -> np.ndarray:
    """Orthogonal spatial beams of the best rotation ordered by UL energy, ``(n_elem, n_pp)``."""
    h = np.concatenate([u.h for u in ul], axis=0)
    n = cfg.n_elem
    if not 1 <= n_pp <= n:
        raise ValueError(f"{n_pp} DFT ports requested from {n} orthogonal beams")
    x = h.reshape(h.shape[0], 2, n, h.shape[2]).conj()
    best = None
    for q1, q2 in rotation_hypotheses(cfg):
        beams = rotation_beams(cfg, q1, q2) / np.sqrt(n)
        energy = (np.abs(np.einsum("eb,rpet->rptb", beams.conj(), x)) ** 2).sum(axis=(0, 1, 2))
        order = np.lexsort((np.arange(n), -energy))[:n_pp]
        score = energy[order].sum()
        if best is None or score > best[0] * (1 + 1e-12):
            best = (score, beams[:, order])
    return best[1]


def port_precoders(kind, ul, cfg: AntennaConfig, n_pp: int, mode=PortPrecoderMode.EIGEN_BASED):
    """Beams behind the CSI-RS ports for port-selection kinds, else None.

    Type II/Enhanced Type II port selection use spatial DFT beams; the
    further enhanced variant uses spatial-frequency precoders.
    """
    kind = CodebookKind(kind)
    if kind in (CodebookKind.TYPE2_PS, CodebookKind.ETYPE2_PS):
        return dft_port_precoders(ul, cfg, n_pp)
    if kind is CodebookKind.FETYPE2_PS:
        return gnb_port_precoders(ul, cfg, n_pp, mode)
    return None


def scheme_precoder(spec: SchemeSpec, user: UserDrop, sim: SimConfig, book: cb.Codebook | None):
    """Reported direction per subband ``(n_3, n_ap)`` plus (bits, indicators)."""
    h = user.dl.h
    if book is None:
        w = effective_rows(h).conj()
        return w / np.linalg.norm(w, axis=1, keepdims=True), (0, 0)
    f = port_precoders(spec.kind, user.ul, sim.cfg, spec.n_ports // 2, spec.port_mode)
    channel = h if f is None else port_channel(h, f)
    pmi = book.encode(channel)
    w = book.decode(pmi, f)[:, :, 0]
    return w, (book.serialized_bits(pmi), book.indicator_count(pmi))


def rzf_se(rows: np.ndarray, directions: np.ndarray, snr: float) -> np.ndarray:
    """Per-user SE averaged over subbands.

    ``rows`` are true effective channels ``(K, n_3, n_ap)``; ``directions``
    the gNB's unit-norm estimates of ``rows^H`` with the same shape.
    """
    k_users, n3, _ = rows.shape
    se = np.zeros(k_users)
    reg = k_users / snr
    p = snr / k_users
    for t in range(n3):
        g_hat = directions[:, t, :].conj()  # (K, n_ap) estimated row directions
        w = g_hat.conj().T @ np.linalg.solve(g_hat @ g_hat.conj().T + reg * np.eye(k_users), np.eye(k_users))
        w = normalize_columns(w)
        gain = np.abs(rows[:, t, :] @ w) ** 2 * p  # (K, K): user k on beam j
        signal = np.diag(gain)
        interference = gain.sum(axis=1) - signal
        se += np.log2(1.0 + signal / (1.0 + interference))
    return se / n3


def run_drop(schemes: Sequence[SchemeSpec], sim: SimConfig, seed: int, drop: int):
    """Mean per-user SE, mean bits and mean indicator count per scheme for one drop."""
    users = draw_users(sim, seed, drop)
    rows = np.stack([effective_rows(u.dl.h) for u in users])
    snr = 10 ** (sim.snr_db / 10)
    out = []
    for spec in schemes:
        book = spec.codebook(sim.cfg, sim.n_3)
        dirs, costs = zip(*(scheme_precoder(spec, u, sim, book) for u in users))
        se = rzf_se(rows, np.stack(dirs), snr)
        out.append((float(se.mean()), float(np.mean([c[0] for c in costs])), float(np.mean([c[1] for c in costs]))))
    return out


def _run_drop_args(args):
    return run_drop(*args)


def evaluate(
    schemes: Sequence[SchemeSpec],
    sim: SimConfig,
    drops: int,
    seed: int = 0,
    n_jobs: int = 1,
) -> list[SeResult]:
    """Evaluate all schemes on the same drops (paired comparison)."""
    if drops < 1:
        raise ValueError("drops must be >= 1")
    if not schemes:
        raise ValueError("no schemes to evaluate")
    tasks = [(tuple(schemes), sim, seed, d) for d in range(drops)]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            per = list(pool.map(_run_drop_args, tasks))
    else:
        per = [run_drop(*t) for t in tasks]
    arr = np.array(per)  # (drops, schemes, 3)
    results = []
    for i, spec in enumerate(schemes):
        se = arr[:, i, 0]
        ci = 1.96 * se.std(ddof=1) / np.sqrt(drops) if drops > 1 else 0.0
        results.append(
            SeResult(
                kind=spec.name,
                mean_se=float(se.mean()),
                ci95=float(ci),
                drops=drops,
                overhead_bits=float(arr[:, i, 1].mean()),
                indicator_count=float(arr[:, i, 2].mean()),
                per_drop=se,
                spec=spec,
            )
        )
    return results


def evaluate_se(
    users: Sequence[ChannelRealization],
    spec: SchemeSpec,
    snr_db: float,
    ul: Sequence[Sequence[ChannelRealization]] | None = None,
) -> float:
    """Mean per-user SE of one scheme on given user channels (single drop)."""
    if not users:
        raise ValueError("need at least one user")
    cfg = users[0].cfg
    if cfg is None:
        raise ValueError("user channels must carry their antenna configuration")
    n_3 = users[0].n_3
    if any(u.cfg != cfg or u.n_3 != n_3 for u in users):
        raise ValueError("all users must share cfg and n_3")
    if len(users) > cfg.n_ap:
        raise ValueError(f"K={len(users)} exceeds n_ap={cfg.n_ap}")
    if ul is None:
        ul = [[u] for u in users]
    sim = SimConfig(cfg=cfg, n_rx=users[0].n_rx, n_3=n_3, n_users=len(users), snr_db=snr_db)
    book = spec.codebook(cfg, n_3)
    drops = [UserDrop(u, list(v)) for u, v in zip(users, ul)]
    dirs = [scheme_precoder(spec, d, sim, book)[0] for d in drops]
    rows = np.stack([effective_rows(u.h) for u in users])
    return float(rzf_se(rows, np.stack(dirs), 10 ** (snr_db / 10)).mean())


def sweep(
    schemes: Sequence[SchemeSpec],
    sim: SimConfig,
    drops: int,
    seed: int = 0,
    n_jobs: int = 1,
) -> list[dict]:
    """CSV-ready rows, one per scheme."""
    rows = []
    for res in evaluate(schemes, sim, drops, seed, n_jobs):
        spec = res.spec
        rows.append(
            dict(
                kind=res.kind,
                L=spec.l_value(sim.n_3),
                M_v=spec.m_v(sim.n_3),
                beta=str(spec.beta) if spec.kind in (
                    CodebookKind.ETYPE2.value, CodebookKind.ETYPE2_PS.value, CodebookKind.FETYPE2_PS.value
                ) else "",
                n_psk=spec.n_psk if spec.kind not in (GENIE, CodebookKind.TYPE1_SP.value, CodebookKind.TYPE1_MP.value) else "",
                K=sim.n_users,
                snr_db=sim.snr_db,
                drops=res.drops,
                mean_se=res.mean_se,
                ci95=res.ci95,
                overhead_bits=res.overhead_bits,
                indicator_count=res.indicator_count,
            )
        )
    return rows


def format_number(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{x:.9g}"
    return str(x)


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([format_number(row[f]) for f in CSV_FIELDS])
    return buf.getvalue()


def bootstrap_diff_ci(a, b, level: float = 0.95, n_boot: int = 4000, seed: int = 0) -> tuple[float, float]:
    """Paired bootstrap confidence interval for ``mean(a - b)``."""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if diff.size < 2:
        raise ValueError("need at least two paired samples")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, diff.size, size=(n_boot, diff.size))
    means = diff[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, (1 + level) / 2])
    return float(lo), float(hi)


def with_label(spec: SchemeSpec, label: str) -> SchemeSpec:
    return replace(spec, label=label)
