"""Uniform front end over the seven codebooks.

Each codebook object fixes the full configuration, so ``encode``,
``decode``, ``serialize``/``parse`` and overhead accounting need only the
channel or the PMI.  Port-selection kinds encode from the per-port
(effective) channel and decode to the port domain unless port precoders are
given.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from math import comb
from typing import ClassVar

import numpy as np

from . import etype2 as et
from . import fetype2ps as fe
from . import multibeam as mb
from . import type1 as t1
from . import type2 as t2
from .beamgrid import AntennaConfig
from .linalg import as_tensor
from .overhead import CodebookKind, OverheadReport, complexity_estimate, overhead_count
from .serialization import BitReader, BitWriter, field


class Codebook:
    kind: ClassVar[CodebookKind]
    rank: int

    def encode(self, channel):
        raise NotImplementedError

    def decode(self, pmi, port_precoders=None) -> np.ndarray:
        raise NotImplementedError

    def layout(self, io, pmi):
        raise NotImplementedError

    def overhead_params(self, pmi) -> dict:
        raise NotImplementedError

    def complexity_params(self) -> dict:
        raise NotImplementedError

    def validate(self, pmi) -> None:
        self.decode(pmi)

    def serialize(self, pmi) -> bytes:
        return self._write(pmi).to_bytes()

    def _write(self, pmi) -> BitWriter:
        self.validate(pmi)
        w = BitWriter()
        rebuilt = self.layout(w, pmi)
        if rebuilt != pmi:
            raise ValueError("PMI carries non-canonical values in unreported fields")
        return w

    def parse(self, data: bytes):
        r = BitReader(data)
        pmi = self.layout(r, None)
        r.finish()
        self.validate(pmi)
        return pmi

    def serialized_bits(self, pmi) -> int:
        return self._write(pmi).n_bits

    def indicator_count(self, pmi) -> int:
        return overhead_count(self.kind, **self.overhead_params(pmi))

    def complexity(self) -> int:
        return complexity_estimate(self.kind, **self.complexity_params())

    def report(self, pmi) -> OverheadReport:
        return OverheadReport(
            codebook=self.kind,
            indicator_count=self.indicator_count(pmi),
            serialized_bits=self.serialized_bits(pmi),
            complexity_ops=self.complexity(),
        )

    def _check_channel(self, channel, n_ports: int, n_3: int) -> np.ndarray:
        h = as_tensor(channel)
        if h.shape[1] != n_ports or h.shape[2] != n_3:
            raise ValueError(f"channel shape {h.shape} does not match ({n_ports} ports, {n_3} subbands)")
        return h


# ---------------------------------------------------------------- Type I


@dataclass(frozen=True)
class Type1SP(Codebook):
    kind: ClassVar[CodebookKind] = CodebookKind.TYPE1_SP
    cfg: AntennaConfig
    rank: int = 1
    n_3: int = 1

    def __post_init__(self):
        t1.check_rank_sp(self.cfg, self.rank)

    def encode(self, channel):
        return t1.encode_type1_sp(self._check_channel(channel, self.cfg.n_ap, self.n_3), self.cfg, self.rank)

    def decode(self, pmi, port_precoders=None):
        if len(pmi.i2) != self.n_3:
            raise ValueError(f"PMI has {len(pmi.i2)} subbands, expected {self.n_3}")
        return t1.decode_type1_sp(pmi, self.cfg, self.rank)

    def layout(self, io, pmi):
        g1, g2 = self.cfg.grid_shape
        i11 = io.uint(field(pmi, "i11"), g1)
        i12 = io.uint(field(pmi, "i12"), g2)
        i13 = io.choice(field(pmi, "i13"), t1.i13_range(self.cfg, self.rank))
        size = t1.cophase_size(self.rank)
        i2 = tuple(io.uint(field(pmi, "i2", t), size) for t in range(self.n_3))
        return t1.PmiType1SP(i11=i11, i12=i12, i2=i2, i13=i13)

    def overhead_params(self, pmi):
        return dict(rank=self.rank, n_3=self.n_3)

    def complexity_params(self):
        return dict(n1=self.cfg.n1, n2=self.cfg.n2, rank=self.rank)


@dataclass(frozen=True)
class Type1MP(Codebook):
    kind: ClassVar[CodebookKind] = CodebookKind.TYPE1_MP
    cfg: AntennaConfig
    rank: int = 1
    c_m: int = 1
    n_3: int = 1

    def __post_init__(self):
        t1.check_mp(self.cfg, self.rank, self.c_m)

    def encode(self, channel):
        h = self._check_channel(channel, self.cfg.n_ap, self.n_3)
        return t1.encode_type1_mp(h, self.cfg, self.rank, self.c_m)

    def decode(self, pmi, port_precoders=None):
        if len(pmi.i2) != self.n_3:
            raise ValueError(f"PMI has {len(pmi.i2)} subbands, expected {self.n_3}")
        return t1.decode_type1_mp(pmi, self.cfg, self.rank, self.c_m)

    def layout(self, io, pmi):
        g1, g2 = self.cfg.grid_shape
        i11 = io.uint(field(pmi, "i11"), g1)
        i12 = io.uint(field(pmi, "i12"), g2)
        i13 = io.choice(field(pmi, "i13"), t1.i13_range(self.cfg, self.rank))
        i14 = tuple(io.uint(field(pmi, "i14", k), r) for k, r in enumerate(t1.i14_ranges(self.cfg.ng, self.c_m)))
        r2 = t1.i2_ranges(self.rank, self.c_m)
        i2 = tuple(
            tuple(io.uint(field(pmi, "i2", t, k), r) for k, r in enumerate(r2)) for t in range(self.n_3)
        )
        return t1.PmiType1MP(i11=i11, i12=i12, i14=i14, i2=i2, i13=i13)

    def overhead_params(self, pmi):
        return dict(n_3=self.n_3, ng=self.cfg.ng, c_m=self.c_m)

    def complexity_params(self):
        return dict(ng=self.cfg.ng, n1=self.cfg.n1, n2=self.cfg.n2, rank=self.rank)


# ---------------------------------------------------------------- Type II


def _type2_coefficients(io, pmi, rank, n_beams, i_s, n_psk, n_3):
    two_l = 2 * n_beams
    i13 = tuple(io.uint(field(pmi, "i13", l), two_l) for l in range(rank))
    i14 = tuple(
        tuple(t2.WB_FULL if i == i13[l] else io.uint(field(pmi, "i14", l, i), 8) for i in range(two_l))
        for l in range(rank)
    )
    i21, i22 = [], []
    for l in range(rank):
        strong, weak = t2.coefficient_tiers(i14[l], i13[l], i_s)
        reported = sorted(strong + weak)
        res = t2.phase_resolution(i14[l], i13[l], i_s, n_psk)
        rows = []
        for t in range(n_3):
            row = [0] * two_l
            for i in reported:
                row[i] = io.uint(field(pmi, "i21", l, t, i), int(res[i]))
            rows.append(tuple(row))
        i21.append(tuple(rows))
    if i_s:
        for l in range(rank):
            strong, _ = t2.coefficient_tiers(i14[l], i13[l], i_s)
            rows = []
            for t in range(n_3):
                row = [1] * two_l
                for i in strong:
                    row[i] = io.uint(field(pmi, "i22", l, t, i), 2)
                rows.append(tuple(row))
            i22.append(tuple(rows))
    return dict(i13=i13, i14=i14, i21=tuple(i21), i22=tuple(i22) if i_s else None)


def _type2_overhead(pmi, i_s):
    rep = t2.compressed_report(pmi, i_s)
    return dict(rank=pmi.rank, n_3=pmi.n_3, i_s=i_s, m_nz=rep.m_nz, m_vr=rep.m_vr)


@dataclass(frozen=True)
class Type2(Codebook):
    kind: ClassVar[CodebookKind] = CodebookKind.TYPE2
    cfg: AntennaConfig
    rank: int = 1
    n_beams: int = 4
    i_s: int = 0
    n_psk: int = 8
    n_3: int = 1

    def __post_init__(self):
        t2.check_params(self.rank, self.n_beams, self.i_s, self.n_psk)

    def encode(self, channel):
        h = self._check_channel(channel, self.cfg.n_ap, self.n_3)
        return t2.encode_type2(h, self.cfg, self.rank, self.n_beams, self.i_s, self.n_psk)[0]

    def decode(self, pmi, port_precoders=None):
        return t2.decode_type2(pmi, self.cfg, self.rank, self.n_beams, self.i_s, self.n_psk, self.n_3)

    def layout(self, io, pmi):
        q1 = io.uint(field(pmi, "q1"), self.cfg.o1)
        q2 = io.uint(field(pmi, "q2"), self.cfg.o2)
        i12 = io.uint(field(pmi, "i12"), comb(self.cfg.n_elem, self.n_beams))
        coeffs = _type2_coefficients(io, pmi, self.rank, self.n_beams, self.i_s, self.n_psk, self.n_3)
        return t2.PmiType2(q1=q1, q2=q2, i12=i12, **coeffs)

    def overhead_params(self, pmi):
        return _type2_overhead(pmi, self.i_s)

    def complexity_params(self):
        return dict(rank=self.rank, n_beams=self.n_beams, n1=self.cfg.n1, n2=self.cfg.n2)


@dataclass(frozen=True)
class Type2PS(Codebook):
    kind: ClassVar[CodebookKind] = CodebookKind.TYPE2_PS
    n_ports: int
    d: int = 1
    rank: int = 1
    n_beams: int = 4
    i_s: int = 0
    n_psk: int = 8
    n_3: int = 1

    def __post_init__(self):
        t2.check_params(self.rank, self.n_beams, self.i_s, self.n_psk)
        mb.selected_ports(0, self.d, self.n_beams, self.n_ports)

    def encode(self, channel):
        h = self._check_channel(channel, self.n_ports, self.n_3)
        return t2.encode_type2_ps(h, self.d, self.rank, self.n_beams, self.i_s, self.n_psk)[0]

    def decode(self, pmi, port_precoders=None):
        if pmi.n_3 != self.n_3:
            raise ValueError(f"PMI has {pmi.n_3} subbands, expected {self.n_3}")
        return t2.decode_type2_ps(
            pmi, self.n_ports, self.d, self.rank, self.n_beams, self.i_s, self.n_psk, port_precoders
        )

    def layout(self, io, pmi):
        i11 = io.uint(field(pmi, "i11"), mb.port_group_count(self.n_ports, self.d))
        coeffs = _type2_coefficients(io, pmi, self.rank, self.n_beams, self.i_s, self.n_psk, self.n_3)
        return t2.PmiType2PS(i11=i11, **coeffs)

    def overhead_params(self, pmi):
        return _type2_overhead(pmi, self.i_s)

    def complexity_params(self):
        return dict(rank=self.rank, n_beams=self.n_beams, d=self.d)


# ---------------------------------------------------------------- Enhanced Type II


def _etype2_coefficients(io, pmi, params: et.EType2Params, rank, n_psk):
    m_v, n_beams = params.m_v, params.l_beams
    two_l = 2 * n_beams
    off = 2 * m_v - 1 if params.windowed else 0
    i15 = io.uint(None if pmi is None else pmi.i15 + off, et.i15_range(params)) - off
    n3 = []
    for l in range(rank):
        code = None if pmi is None else et.i16_value(pmi.n3[l], params, i15)
        n3.append(et.n3_from_i16(io.uint(code, et.i16_range(params)), params, i15))
    i17 = tuple(tuple(io.uint(field(pmi, "i17", l, p), 2) for p in range(two_l * m_v)) for l in range(rank))
    i18 = tuple(io.uint(field(pmi, "i18", l), two_l) for l in range(rank))
    i23 = []
    for l in range(rank):
        ref = [et.REF_FULL, et.REF_FULL]
        weak_pol = 1 - i18[l] // n_beams
        ref[weak_pol] = io.uint(field(pmi, "i23", l, weak_pol), 16)
        i23.append(tuple(ref))
    counts = [sum(i17[l]) - bool(i17[l][i18[l] * m_v]) for l in range(rank)]
    i24 = tuple(tuple(io.uint(field(pmi, "i24", l, k), 8) for k in range(counts[l])) for l in range(rank))
    i25 = tuple(tuple(io.uint(field(pmi, "i25", l, k), n_psk) for k in range(counts[l])) for l in range(rank))
    return dict(i15=i15, n3=tuple(n3), i17=i17, i18=i18, i23=tuple(i23), i24=i24, i25=i25)


def _etype2_overhead(pmi, params: et.EType2Params):
    return dict(rank=pmi.rank, n_3=params.n_3, n_beams=params.l_beams, m_v=params.m_v, m_nz=sum(pmi.m_nz))


@dataclass(frozen=True)
class EType2(Codebook):
    kind: ClassVar[CodebookKind] = CodebookKind.ETYPE2
    cfg: AntennaConfig
    params: et.EType2Params = dc_field(default_factory=et.EType2Params)
    rank: int = 1
    n_psk: int = 4

    def encode(self, channel):
        h = self._check_channel(channel, self.cfg.n_ap, self.params.n_3)
        return et.encode_etype2(h, self.cfg, self.params, self.rank, self.n_psk)

    def decode(self, pmi, port_precoders=None):
        return et.decode_etype2(pmi, self.cfg, self.params, self.rank, self.n_psk)

    def layout(self, io, pmi):
        q1 = io.uint(field(pmi, "q1"), self.cfg.o1)
        q2 = io.uint(field(pmi, "q2"), self.cfg.o2)
        i12 = io.uint(field(pmi, "i12"), comb(self.cfg.n_elem, self.params.l_beams))
        coeffs = _etype2_coefficients(io, pmi, self.params, self.rank, self.n_psk)
        return et.PmiEType2(q1=q1, q2=q2, i12=i12, **coeffs)

    def overhead_params(self, pmi):
        return _etype2_overhead(pmi, self.params)

    def complexity_params(self):
        p = self.params
        return dict(rank=self.rank, n_beams=p.l_beams, m_v=p.m_v, n1=self.cfg.n1, n2=self.cfg.n2)


@dataclass(frozen=True)
class EType2PS(Codebook):
    kind: ClassVar[CodebookKind] = CodebookKind.ETYPE2_PS
    n_ports: int
    d: int = 1
    params: et.EType2Params = dc_field(default_factory=lambda: et.EType2Params(l_beams=4))
    rank: int = 1
    n_psk: int = 4

    def __post_init__(self):
        et._check_rank(self.rank, self.params, ps=True)
        mb.selected_ports(0, self.d, self.params.l_beams, self.n_ports)

    def encode(self, channel):
        h = self._check_channel(channel, self.n_ports, self.params.n_3)
        return et.encode_etype2_ps(h, self.d, self.params, self.rank, self.n_psk)

    def decode(self, pmi, port_precoders=None):
        return et.decode_etype2_ps(pmi, self.n_ports, self.d, self.params, self.rank, self.n_psk, port_precoders)

    def layout(self, io, pmi):
        i11 = io.uint(field(pmi, "i11"), mb.port_group_count(self.n_ports, self.d))
        coeffs = _etype2_coefficients(io, pmi, self.params, self.rank, self.n_psk)
        return et.PmiEType2PS(i11=i11, **coeffs)

    def overhead_params(self, pmi):
        return _etype2_overhead(pmi, self.params)

    def complexity_params(self):
        p = self.params
        return dict(rank=self.rank, n_beams=p.l_beams, m_v=p.m_v, d=self.d)


# ---------------------------------------------------------------- Further Enhanced Type II PS


@dataclass(frozen=True)
class FeType2PS(Codebook):
    kind: ClassVar[CodebookKind] = CodebookKind.FETYPE2_PS
    params: fe.FeParams = dc_field(default_factory=fe.FeParams)
    rank: int = 1
    n_psk: int = 8

    def __post_init__(self):
        fe._check_rank(self.rank)

    def encode(self, channel):
        h = self._check_channel(channel, self.params.n_ap, self.params.n_3)
        return fe.encode_fetype2ps(h, self.params, self.rank, self.n_psk)

    def decode(self, pmi, port_precoders=None):
        return fe.decode_fetype2ps(pmi, port_precoders, self.params, self.rank, self.n_psk)

    def layout(self, io, pmi):
        p = self.params
        size = 2 * p.k_ports * p.m
        port_choice = io.uint(field(pmi, "port_choice"), comb(p.n_pp, p.k_ports))
        i16 = io.uint(field(pmi, "i16"), p.i16_range)
        if self.rank <= 2:
            bitmap = tuple((1,) * size for _ in range(self.rank))
        else:
            bitmap = tuple(tuple(io.uint(field(pmi, "bitmap", l, k), 2) for k in range(size)) for l in range(self.rank))
        amp = tuple(tuple(io.uint(field(pmi, "amp", l, k), 8) for k in range(sum(bitmap[l]))) for l in range(self.rank))
        phase = tuple(
            tuple(io.uint(field(pmi, "phase", l, k), self.n_psk) for k in range(sum(bitmap[l])))
            for l in range(self.rank)
        )
        return fe.PmiFeType2PS(port_choice=port_choice, i16=i16, bitmap=bitmap, amp=amp, phase=phase)

    def overhead_params(self, pmi):
        p = self.params
        return dict(rank=self.rank, n_beams=p.k_ports, m=p.m, n_big=p.n_big, m_nz=sum(pmi.m_nz))

    def complexity_params(self):
        return dict(rank=self.rank, n_beams=self.params.k_ports, m=self.params.m)


CODEBOOKS: dict[CodebookKind, type[Codebook]] = {
    cls.kind: cls for cls in (Type1SP, Type1MP, Type2, Type2PS, EType2, EType2PS, FeType2PS)
}


def make_codebook(kind, **config) -> Codebook:
    return CODEBOOKS[CodebookKind(kind)](**config)
