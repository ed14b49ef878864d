"""Command-line front end (``nrcb``).

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation error.
Every number printed comes from library calls; the CLI only formats.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import chansim
from . import etype2 as et
from . import fetype2ps as fe
from . import type1 as t1
from . import type2 as t2
from .beamgrid import AntennaConfig
from .codebooks import make_codebook
from .linalg import precoder_nmse, target_precoders
from .overhead import CodebookKind

SEED_ENV = "NR_CB_SEED"

PMI_TYPES = {
    CodebookKind.TYPE1_SP: t1.PmiType1SP,
    CodebookKind.TYPE1_MP: t1.PmiType1MP,
    CodebookKind.TYPE2: t2.PmiType2,
    CodebookKind.TYPE2_PS: t2.PmiType2PS,
    CodebookKind.ETYPE2: et.PmiEType2,
    CodebookKind.ETYPE2_PS: et.PmiEType2PS,
    CodebookKind.FETYPE2_PS: fe.PmiFeType2PS,
}
PS_KINDS = (CodebookKind.TYPE2_PS, CodebookKind.ETYPE2_PS, CodebookKind.FETYPE2_PS)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    kind: str = "type1sp"
    n1: int = 4
    n2: int = 2
    o1: int = 4
    o2: int = 4
    ng: int = 1
    n3: int = 13
    rank: int = 1
    L: int = 4
    p_v: str = "1/4"
    beta: str = "1/2"
    R: int = 1
    d: int = 1
    alpha: str = "1/2"
    m: int = 1
    N: int = 2
    n_psk: int | None = None
    i_s: int = 0
    c_m: int = 1
    n_ports: int = 16
    port_mode: str = "eigen"
    n_rx: int = 2
    paths: int = 6
    K: int = 4
    snr_db: float = 10.0
    drops: int = 100
    seed: int | None = None
    output: str | None = None

    @property
    def codebook_kind(self) -> CodebookKind:
        return _field("kind", CodebookKind, self.kind)

    def antenna(self) -> AntennaConfig:
        return _field("n1/n2/o1/o2/ng", lambda _: AntennaConfig(self.n1, self.n2, self.o1, self.o2, self.ng), None)

    def psk(self, kind: CodebookKind) -> int:
        if self.n_psk is not None:
            return self.n_psk
        return 4 if kind in (CodebookKind.ETYPE2, CodebookKind.ETYPE2_PS) else 8

    def scheme(self, kind: CodebookKind | str | None = None) -> chansim.SchemeSpec:
        kind = self.codebook_kind if kind is None else CodebookKind(kind)
        return _field(
            "scheme",
            lambda _: chansim.SchemeSpec(
                kind=kind.value,
                n_beams=self.L,
                p_v=Fraction(self.p_v),
                beta=Fraction(self.beta),
                r=self.R,
                n_psk=self.psk(kind),
                i_s=self.i_s,
                d=self.d,
                n_ports=self.n_ports,
                alpha=Fraction(self.alpha),
                m=self.m,
                n_big=self.N,
                port_mode=self.port_mode,
            ),
            None,
        )

    def codebook(self, kind: CodebookKind | None = None, cfg: AntennaConfig | None = None):
        kind = self.codebook_kind if kind is None else kind
        cfg = self.antenna() if cfg is None else cfg
        n_psk = self.psk(kind)

        def build(_):
            if kind is CodebookKind.TYPE1_SP:
                return make_codebook(kind, cfg=cfg, rank=self.rank, n_3=self.n3)
            if kind is CodebookKind.TYPE1_MP:
                return make_codebook(kind, cfg=cfg, rank=self.rank, c_m=self.c_m, n_3=self.n3)
            if kind is CodebookKind.TYPE2:
                return make_codebook(kind, cfg=cfg, rank=self.rank, n_beams=self.L, i_s=self.i_s, n_psk=n_psk, n_3=self.n3)
            if kind is CodebookKind.TYPE2_PS:
                return make_codebook(
                    kind, n_ports=self.n_ports, d=self.d, rank=self.rank, n_beams=self.L,
                    i_s=self.i_s, n_psk=n_psk, n_3=self.n3,
                )
            if kind is CodebookKind.FETYPE2_PS:
                params = fe.FeParams(
                    alpha=Fraction(self.alpha), n_ap=self.n_ports, m=self.m, n_big=self.N,
                    beta=Fraction(self.beta), n_3=self.n3,
                )
                return make_codebook(kind, params=params, rank=self.rank, n_psk=n_psk)
            params = et.EType2Params(
                l_beams=self.L, p_v=Fraction(self.p_v), beta=Fraction(self.beta), r=self.R, n_3=self.n3
            )
            if kind is CodebookKind.ETYPE2:
                return make_codebook(kind, cfg=cfg, params=params, rank=self.rank, n_psk=n_psk)
            return make_codebook(kind, n_ports=self.n_ports, d=self.d, params=params, rank=self.rank, n_psk=n_psk)

        return _field(kind.value, build, None)


def _field(name: str, conv, value):
    try:
        return conv(value)
    except (ValueError, TypeError, ZeroDivisionError, IndexError) as exc:
        raise UsageError(f"{name}: {exc}") from None


def resolve_seed(cfg: RunConfig) -> int:
    if cfg.seed is not None:
        return cfg.seed
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    return _field(SEED_ENV, int, raw)


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise UsageError("config: top level must be an object")
    names = {f.name for f in fields(RunConfig)}
    unknown = set(data) - names
    if unknown:
        raise UsageError(f"config: unknown field(s) {sorted(unknown)}")
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    return RunConfig(**data)


# ---------------------------------------------------------------- formatting


def fmt(x) -> str:
    return chansim.format_number(float(x))


def precoder_csv(w: np.ndarray) -> str:
    lines = ["subband,layer,port,re,im"]
    n3, n_ap, rank = w.shape
    for t in range(n3):
        for layer in range(rank):
            for a in range(n_ap):
                z = w[t, a, layer]
                lines.append(f"{t},{layer},{a},{fmt(z.real)},{fmt(z.imag)}")
    return "\n".join(lines) + "\n"


def pmi_to_json(pmi) -> str:
    return json.dumps(dataclasses.asdict(pmi), sort_keys=True)


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


def pmi_from_json(kind: CodebookKind, text: str):
    try:
        data = json.loads(text)
        return PMI_TYPES[kind](**{k: _tuplify(v) for k, v in data.items()})
    except (json.JSONDecodeError, TypeError) as exc:
        raise UsageError(f"pmi: {exc}") from None


# ---------------------------------------------------------------- commands


def _channel_and_ports(cfg: RunConfig, kind: CodebookKind, antenna: AntennaConfig, seed: int):
    dl = _field(
        "channel", lambda _: chansim.gen_channel(antenna, cfg.n_rx, cfg.n3, seed=[seed, 0, 0], n_paths=cfg.paths), None
    )
    ports = None
    if kind in PS_KINDS:
        ul = [chansim.gen_ul_from_dl(dl, seed=[seed, 0, 0, 1 + s]) for s in range(4)]
        ports = _field(
            "port precoders",
            lambda _: chansim.port_precoders(kind, ul, antenna, cfg.n_ports // 2, cfg.port_mode),
            None,
        )
    return dl, ports


def _measured(dl, ports):
    return dl.h if ports is None else chansim.port_channel(dl.h, ports)


def _antenna_for(cfg: RunConfig, kind: CodebookKind) -> AntennaConfig:
    antenna = cfg.antenna()
    if kind is CodebookKind.TYPE1_MP and antenna.ng == 1:
        antenna = AntennaConfig(antenna.n1, antenna.n2, antenna.o1, antenna.o2, ng=2)
    if kind is not CodebookKind.TYPE1_MP and antenna.ng != 1:
        antenna = AntennaConfig(antenna.n1, antenna.n2, antenna.o1, antenna.o2, ng=1)
    return antenna


def cmd_codeword(cfg: RunConfig, args) -> str:
    kind = cfg.codebook_kind
    book = cfg.codebook()
    if args.pmi is not None:
        pmi = pmi_from_json(kind, args.pmi)
    elif args.payload is not None:
        pmi = _field("payload", lambda p: book.parse(bytes.fromhex(p)), args.payload)
    elif kind is CodebookKind.TYPE1_SP:
        pmi = t1.PmiType1SP(i11=args.m1, i12=args.m2, i2=(args.n,) * cfg.n3, i13=args.i13)
    else:
        raise UsageError("pmi: give --pmi JSON or --payload hex for this codebook")
    w = _field("pmi", book.decode, pmi)
    return precoder_csv(w)


def cmd_encode(cfg: RunConfig, args) -> str:
    kind = cfg.codebook_kind
    antenna = cfg.antenna()
    book = cfg.codebook()
    dl, ports = _channel_and_ports(cfg, kind, antenna, resolve_seed(cfg))
    pmi = _field("encode", book.encode, _measured(dl, ports))
    payload = book.serialize(pmi)
    return "\n".join([
        f"pmi,{pmi_to_json(pmi)}",
        f"payload,{payload.hex()}",
        f"serialized_bits,{book.serialized_bits(pmi)}",
        f"indicator_count,{book.indicator_count(pmi)}",
    ]) + "\n"


def cmd_decode(cfg: RunConfig, args) -> str:
    book = cfg.codebook()
    pmi = _field("payload", lambda p: book.parse(bytes.fromhex(p)), args.payload)
    return precoder_csv(book.decode(pmi))


def cmd_roundtrip(cfg: RunConfig, args) -> str:
    kind = cfg.codebook_kind
    antenna = cfg.antenna()
    book = cfg.codebook()
    dl, ports = _channel_and_ports(cfg, kind, antenna, resolve_seed(cfg))
    pmi = _field("encode", book.encode, _measured(dl, ports))
    parsed = book.parse(book.serialize(pmi))
    w = book.decode(parsed, ports)
    nmse = precoder_nmse(w, target_precoders(dl.h, cfg.rank))
    rep = book.report(pmi)
    return "\n".join([
        f"identical,{parsed == pmi}",
        f"nmse,{fmt(nmse)}",
        f"indicator_count,{rep.indicator_count}",
        f"serialized_bits,{rep.serialized_bits}",
        f"complexity_ops,{rep.complexity_ops}",
    ]) + "\n"


def cmd_overhead(cfg: RunConfig, args) -> str:
    kinds = [CodebookKind(k) for k in (args.kinds or [k.value for k in CodebookKind])]
    seed = resolve_seed(cfg)
    lines = ["kind,n3,rank,indicator_count,serialized_bits,complexity_ops"]
    for kind in kinds:
        antenna = _field("antenna", lambda _: _antenna_for(cfg, kind), None)
        book = cfg.codebook(kind, antenna)
        dl, ports = _channel_and_ports(cfg, kind, antenna, seed)
        pmi = _field("encode", book.encode, _measured(dl, ports))
        rep = book.report(pmi)
        lines.append(f"{kind.value},{cfg.n3},{cfg.rank},{rep.indicator_count},{rep.serialized_bits},{rep.complexity_ops}")
    return "\n".join(lines) + "\n"


def cmd_simulate(cfg: RunConfig, args) -> str:
    if cfg.drops < 1:
        raise UsageError("drops: must be >= 1")
    kinds = args.kinds or [cfg.kind]
    schemes = []
    for k in kinds:
        if k == chansim.GENIE:
            schemes.append(chansim.SchemeSpec(chansim.GENIE))
        else:
            schemes.append(cfg.scheme(_field("kind", CodebookKind, k)))
    sim = _field(
        "simulation",
        lambda _: chansim.SimConfig(
            cfg=cfg.antenna(), n_rx=cfg.n_rx, n_3=cfg.n3, n_users=cfg.K, n_paths=cfg.paths, snr_db=cfg.snr_db
        ),
        None,
    )
    rows = _field("simulation", lambda _: chansim.sweep(schemes, sim, cfg.drops, resolve_seed(cfg), args.jobs), None)
    return chansim.rows_to_csv(rows)


COMMANDS = {
    "codeword": cmd_codeword,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "roundtrip": cmd_roundtrip,
    "overhead": cmd_overhead,
    "simulate": cmd_simulate,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--kind", choices=[k.value for k in CodebookKind])
    for name in ("n1", "n2", "o1", "o2", "ng", "n3", "rank", "L", "R", "d", "m", "N", "n-psk", "i-s", "c-m",
                 "n-ports", "n-rx", "paths", "K", "drops", "seed"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), type=int)
    for name in ("p-v", "beta", "alpha"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"), help="rational, e.g. 1/4")
    p.add_argument("--port-mode", dest="port_mode", choices=["dft", "eigen"])
    p.add_argument("--snr-db", dest="snr_db", type=float)
    p.add_argument("--output", "-o", help="write output to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nrcb", description="5G NR CSI codebooks: encode, decode, overhead, simulate")
    sub = parser.add_subparsers(dest="command", required=True)
    cw = sub.add_parser("codeword", help="print a decoded precoder")
    _common(cw)
    cw.add_argument("--m1", type=int, default=0)
    cw.add_argument("--m2", type=int, default=0)
    cw.add_argument("--n", type=int, default=0, help="co-phase index for every subband")
    cw.add_argument("--i13", type=int, default=0)
    cw.add_argument("--pmi", help="PMI as JSON")
    cw.add_argument("--payload", help="serialized PMI as hex")
    enc = sub.add_parser("encode", help="encode a seeded channel")
    _common(enc)
    dec = sub.add_parser("decode", help="decode a serialized PMI")
    _common(dec)
    dec.add_argument("--payload", required=True, help="serialized PMI as hex")
    rt = sub.add_parser("roundtrip", help="encode, serialize, parse and decode a seeded channel")
    _common(rt)
    ov = sub.add_parser("overhead", help="overhead table per codebook kind")
    _common(ov)
    ov.add_argument("--kinds", nargs="+", choices=[k.value for k in CodebookKind])
    sim = sub.add_parser("simulate", help="MU-MIMO spectral-efficiency sweep as CSV")
    _common(sim)
    sim.add_argument("--kinds", nargs="+", choices=[k.value for k in CodebookKind] + [chansim.GENIE])
    sim.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args)
        text = COMMANDS[args.command](cfg, args)
        if cfg.output:
            with open(cfg.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except UsageError as exc:
        print(f"nrcb: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"nrcb: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"nrcb: I/O error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort exit code for runtime failures
        print(f"nrcb: runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
