"""Feedback-overhead indicator counts and gNB precoder-computation complexity.

Counts follow the convention "every reported coefficient and indicator over
all subbands" and are evaluated from configuration plus the per-layer
nonzero-coefficient counts.  ``m_nz`` means:

* Type II (and PS): nonzero wideband amplitudes excluding the strongest
  coefficient, which is implied by ``i13`` and not reported;
* Enhanced Type II (and PS) and FeType2PS: bitmap weight, strongest included.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

WINDOW_THRESHOLD = 19


class CodebookKind(str, enum.Enum):
    TYPE1_SP = "type1sp"
    TYPE1_MP = "type1mp"
    TYPE2 = "type2"
    TYPE2_PS = "type2ps"
    ETYPE2 = "etype2"
    ETYPE2_PS = "etype2ps"
    FETYPE2_PS = "fetype2ps"


@dataclass(frozen=True)
class OverheadReport:
    codebook: CodebookKind
    indicator_count: int
    serialized_bits: int
    complexity_ops: int


def _need(params: dict, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise ValueError(f"missing parameter(s) {missing}")
    return [params[n] for n in names]


def _total(x) -> int:
    return sum(x) if isinstance(x, Sequence) else int(x)


def overhead_count(kind, **params) -> int:
    """Indicator count for ``kind``.

    Parameters by kind (``rank`` is the layer count everywhere):

    * type1sp: rank, n_3
    * type1mp: n_3, ng, c_m
    * type2 / type2ps: rank, n_3, i_s, m_nz (per layer), m_vr (per layer, i_s=1)
    * etype2 / etype2ps: rank, n_3, n_beams, m_v, m_nz (total or per layer)
    * fetype2ps: rank, n_beams (ports per polarization), m, n_big, m_nz (rank > 2)
    """
    kind = CodebookKind(kind)
    if kind is CodebookKind.TYPE1_SP:
        rank, n3 = _need(params, "rank", "n_3")
        if rank not in (1, 2, 3, 4):
            raise ValueError(f"invalid rank {rank}")
        return (2 if rank <= 2 else 3) + n3
    if kind is CodebookKind.TYPE1_MP:
        n3, ng, c_m = _need(params, "n_3", "ng", "c_m")
        branch = {(2, 1): 6, (2, 2): 7, (4, 1): 8}.get((ng, c_m))
        if branch is None:
            raise ValueError(f"invalid multi-panel branch ng={ng}, c_m={c_m}")
        return branch + n3
    if kind in (CodebookKind.TYPE2, CodebookKind.TYPE2_PS):
        rank, n3, i_s, m_nz = _need(params, "rank", "n_3", "i_s", "m_nz")
        head = (2 if kind is CodebookKind.TYPE2 else 1) + rank
        m_nz = list(m_nz)
        if len(m_nz) != rank:
            raise ValueError("m_nz must list one count per layer")
        if i_s == 0:
            return head + (n3 + 1) * sum(m_nz)
        if i_s == 1:
            (m_vr,) = _need(params, "m_vr")
            if len(m_vr) != rank:
                raise ValueError("m_vr must list one count per layer")
            return head + sum(2 * n3 * v + z for v, z in zip(m_vr, m_nz))
        raise ValueError(f"invalid i_s={i_s}")
    if kind in (CodebookKind.ETYPE2, CodebookKind.ETYPE2_PS):
        rank, n3, n_beams, m_v, m_nz = _need(params, "rank", "n_3", "n_beams", "m_v", "m_nz")
        head = (2 if kind is CodebookKind.ETYPE2 else 1) + (n3 > WINDOW_THRESHOLD)
        return head + rank + 2 * n_beams * m_v * rank + 2 * _total(m_nz)
    rank, n_beams, m, n_big = _need(params, "rank", "n_beams", "m", "n_big")
    if n_big not in (2, 4):
        raise ValueError(f"invalid N={n_big}")
    head = 1 if n_big == 2 else 2
    if rank <= 2:
        return head + 4 * n_beams * m * rank
    (m_nz,) = _need(params, "m_nz")
    return head + 2 * m * n_beams * rank + 2 * _total(m_nz)


def complexity_estimate(kind, **params) -> int:
    """Operation count inside the gNB complexity order for ``kind``."""
    kind = CodebookKind(kind)
    if kind is CodebookKind.TYPE1_SP:
        n1, n2, rank = _need(params, "n1", "n2", "rank")
        return 2 * n1 * n2 * rank
    if kind is CodebookKind.TYPE1_MP:
        ng, n1, n2, rank = _need(params, "ng", "n1", "n2", "rank")
        return 2 * ng * n1 * n2 * rank
    if kind is CodebookKind.TYPE2:
        rank, n_beams, n1, n2 = _need(params, "rank", "n_beams", "n1", "n2")
        return 2 * rank * n_beams * n1 * n2
    if kind is CodebookKind.TYPE2_PS:
        rank, n_beams, d = _need(params, "rank", "n_beams", "d")
        return 2 * rank * n_beams * d
    if kind is CodebookKind.ETYPE2:
        rank, n_beams, m_v, n1, n2 = _need(params, "rank", "n_beams", "m_v", "n1", "n2")
        return 2 * rank * n_beams * m_v * n1 * n2
    if kind is CodebookKind.ETYPE2_PS:
        rank, n_beams, m_v, d = _need(params, "rank", "n_beams", "m_v", "d")
        return 2 * rank * n_beams * m_v * d
    rank, n_beams, m = _need(params, "rank", "n_beams", "m")
    return 2 * rank * n_beams**2 * m
