"""Random valid PMIs and the codebook configurations they belong to.

Each generator draws every field uniformly from its legal range, then
enforces the cross-field rules (strongest coefficient set, bitmap budget,
unreported fields at their canonical values).
"""
from __future__ import annotations

from math import comb

import numpy as np

from nrcodebook import codebooks as cb
from nrcodebook import etype2 as et
from nrcodebook import fetype2ps as fe
from nrcodebook import type1 as t1
from nrcodebook import type2 as t2
from nrcodebook.beamgrid import AntennaConfig
from nrcodebook.multibeam import port_group_count, selected_ports

BOOKS = {
    "type1sp": [
        cb.Type1SP(AntennaConfig(4, 2, 4, 4), rank=1, n_3=4),
        cb.Type1SP(AntennaConfig(4, 1, 4, 1), rank=3, n_3=3),
        cb.Type1SP(AntennaConfig(2, 2, 4, 4), rank=4, n_3=2),
    ],
    "type1mp": [
        cb.Type1MP(AntennaConfig(2, 1, 4, 1, ng=2), rank=1, c_m=1, n_3=3),
        cb.Type1MP(AntennaConfig(2, 2, 4, 4, ng=2), rank=2, c_m=2, n_3=2),
        cb.Type1MP(AntennaConfig(2, 1, 4, 1, ng=4), rank=3, c_m=1, n_3=2),
    ],
    "type2": [
        cb.Type2(AntennaConfig(4, 2, 4, 4), rank=1, n_beams=4, i_s=0, n_psk=8, n_3=3),
        cb.Type2(AntennaConfig(4, 1, 4, 1), rank=2, n_beams=2, i_s=1, n_psk=4, n_3=2),
        cb.Type2(AntennaConfig(2, 2, 4, 4), rank=2, n_beams=3, i_s=1, n_psk=8, n_3=2),
    ],
    "type2ps": [
        cb.Type2PS(16, d=1, rank=1, n_beams=4, i_s=0, n_psk=8, n_3=3),
        cb.Type2PS(32, d=2, rank=2, n_beams=2, i_s=1, n_psk=4, n_3=2),
    ],
    "etype2": [
        cb.EType2(AntennaConfig(4, 2, 4, 4), et.EType2Params(4, "1/4", "1/2", 1, 13), rank=1, n_psk=16),
        cb.EType2(AntennaConfig(4, 1, 4, 1), et.EType2Params(2, "1/8", "3/4", 2, 24), rank=2, n_psk=8),
        cb.EType2(AntennaConfig(2, 2, 4, 4), et.EType2Params(2, "1/4", "1/4", 1, 8), rank=4, n_psk=4),
    ],
    "etype2ps": [
        cb.EType2PS(16, 1, et.EType2Params(4, "1/4", "1/2", 1, 10), rank=1, n_psk=16),
        cb.EType2PS(32, 4, et.EType2Params(2, "1/4", "3/4", 1, 24), rank=3, n_psk=8),
    ],
    "fetype2ps": [
        cb.FeType2PS(fe.FeParams("1/2", 16, 1, 2, "1/2", 13), rank=1, n_psk=8),
        cb.FeType2PS(fe.FeParams(1, 8, 2, 4, "1/2", 8), rank=2, n_psk=16),
        cb.FeType2PS(fe.FeParams("3/4", 16, 2, 4, "1/2", 6), rank=4, n_psk=4),
    ],
}


def _valid_i11(rng, n_ports, d, n_beams) -> int:
    groups = []
    for i11 in range(port_group_count(n_ports, d)):
        try:
            selected_ports(i11, d, n_beams, n_ports)
            groups.append(i11)
        except ValueError:
            pass
    return int(rng.choice(groups))


def _ints(rng, high, size) -> tuple[int, ...]:
    return tuple(int(v) for v in rng.integers(0, high, size))


def _bitmap(rng, size, forced, budget_left) -> list[int]:
    """Random bitmap with ``forced`` set and at most ``budget_left`` ones."""
    bits = (rng.random(size) < rng.uniform(0.1, 0.9)).astype(int)
    bits[forced] = 1
    on = [i for i in np.flatnonzero(bits) if i != forced]
    excess = int(bits.sum()) - budget_left
    if excess > 0:
        bits[rng.choice(on, size=excess, replace=False)] = 0
    return [int(b) for b in bits]


def random_type1sp(book: cb.Type1SP, rng):
    g1, g2 = book.cfg.grid_shape
    i13 = list(t1.i13_range(book.cfg, book.rank))
    return t1.PmiType1SP(
        i11=int(rng.integers(g1)),
        i12=int(rng.integers(g2)),
        i2=_ints(rng, t1.cophase_size(book.rank), book.n_3),
        i13=int(rng.choice(i13)),
    )


def random_type1mp(book: cb.Type1MP, rng):
    g1, g2 = book.cfg.grid_shape
    i13 = list(t1.i13_range(book.cfg, book.rank))
    i14 = tuple(int(rng.integers(r)) for r in t1.i14_ranges(book.cfg.ng, book.c_m))
    r2 = t1.i2_ranges(book.rank, book.c_m)
    i2 = tuple(tuple(int(rng.integers(r)) for r in r2) for _ in range(book.n_3))
    return t1.PmiType1MP(i11=int(rng.integers(g1)), i12=int(rng.integers(g2)), i14=i14, i2=i2, i13=int(rng.choice(i13)))


def _type2_fields(rank, n_beams, i_s, n_psk, n_3, rng) -> dict:
    two_l = 2 * n_beams
    i13, i14, i21, i22 = [], [], [], []
    for _ in range(rank):
        star = int(rng.integers(two_l))
        k1 = list(_ints(rng, 8, two_l))
        k1[star] = t2.WB_FULL
        k1 = tuple(k1)
        strong, weak = t2.coefficient_tiers(k1, star, i_s)
        res = t2.phase_resolution(k1, star, i_s, n_psk)
        rows, amps = [], []
        for _ in range(n_3):
            row = [0] * two_l
            for i in strong + weak:
                row[i] = int(rng.integers(res[i]))
            rows.append(tuple(row))
            sb = [1] * two_l
            for i in strong:
                sb[i] = int(rng.integers(2))
            amps.append(tuple(sb))
        i13.append(star)
        i14.append(k1)
        i21.append(tuple(rows))
        i22.append(tuple(amps))
    return dict(i13=tuple(i13), i14=tuple(i14), i21=tuple(i21), i22=tuple(i22) if i_s else None)


def random_type2(book: cb.Type2, rng):
    cfg = book.cfg
    return t2.PmiType2(
        q1=int(rng.integers(cfg.o1)),
        q2=int(rng.integers(cfg.o2)),
        i12=int(rng.integers(comb(cfg.n_elem, book.n_beams))),
        **_type2_fields(book.rank, book.n_beams, book.i_s, book.n_psk, book.n_3, rng),
    )


def random_type2ps(book: cb.Type2PS, rng):
    return t2.PmiType2PS(
        i11=_valid_i11(rng, book.n_ports, book.d, book.n_beams),
        **_type2_fields(book.rank, book.n_beams, book.i_s, book.n_psk, book.n_3, rng),
    )


def _etype2_fields(params: et.EType2Params, rank, n_psk, rng) -> dict:
    two_l, m_v = 2 * params.l_beams, params.m_v
    off = 2 * m_v - 1 if params.windowed else 0
    i15 = int(rng.integers(et.i15_range(params))) - off
    budget = params.budget(rank)
    n3, i17, i18, i23, i24, i25 = [], [], [], [], [], []
    for layer in range(rank):
        n3.append(et.n3_from_i16(int(rng.integers(et.i16_range(params))), params, i15))
        star = int(rng.integers(two_l))
        # leave one slot for each later layer's strongest coefficient
        left = budget - sum(sum(b) for b in i17) - (rank - layer - 1)
        bits = _bitmap(rng, two_l * m_v, star * m_v, left)
        ref = [et.REF_FULL, et.REF_FULL]
        ref[1 - star // params.l_beams] = int(rng.integers(16))
        n_rep = sum(bits) - 1
        i17.append(tuple(bits))
        i18.append(star)
        i23.append(tuple(ref))
        i24.append(_ints(rng, 8, n_rep))
        i25.append(_ints(rng, n_psk, n_rep))
    return dict(i15=i15, n3=tuple(n3), i17=tuple(i17), i18=tuple(i18), i23=tuple(i23), i24=tuple(i24), i25=tuple(i25))


def random_etype2(book: cb.EType2, rng):
    cfg = book.cfg
    return et.PmiEType2(
        q1=int(rng.integers(cfg.o1)),
        q2=int(rng.integers(cfg.o2)),
        i12=int(rng.integers(comb(cfg.n_elem, book.params.l_beams))),
        **_etype2_fields(book.params, book.rank, book.n_psk, rng),
    )


def random_etype2ps(book: cb.EType2PS, rng):
    return et.PmiEType2PS(
        i11=_valid_i11(rng, book.n_ports, book.d, book.params.l_beams),
        **_etype2_fields(book.params, book.rank, book.n_psk, rng),
    )


def random_fetype2ps(book: cb.FeType2PS, rng):
    p = book.params
    size = 2 * p.k_ports * p.m
    bitmaps = []
    if book.rank <= 2:
        bitmaps = [[1] * size for _ in range(book.rank)]
    else:
        budget = p.budget(book.rank)
        for layer in range(book.rank):
            left = budget - sum(sum(b) for b in bitmaps) - (book.rank - layer - 1)
            bitmaps.append(_bitmap(rng, size, int(rng.integers(size)), left))
    return fe.PmiFeType2PS(
        port_choice=int(rng.integers(comb(p.n_pp, p.k_ports))),
        i16=int(rng.integers(p.i16_range)),
        bitmap=tuple(tuple(b) for b in bitmaps),
        amp=tuple(_ints(rng, 8, sum(b)) for b in bitmaps),
        phase=tuple(_ints(rng, book.n_psk, sum(b)) for b in bitmaps),
    )


GENERATORS = {
    "type1sp": random_type1sp,
    "type1mp": random_type1mp,
    "type2": random_type2,
    "type2ps": random_type2ps,
    "etype2": random_etype2,
    "etype2ps": random_etype2ps,
    "fetype2ps": random_fetype2ps,
}


def random_pmi(kind: str, book, rng):
    return GENERATORS[kind](book, rng)
