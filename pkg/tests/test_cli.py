import json

import numpy as np
import pytest

from nrcodebook import cli
from nrcodebook import codebooks as cb
from nrcodebook import type2 as t2
from nrcodebook.beamgrid import AntennaConfig
from nrcodebook.overhead import CodebookKind, overhead_count

SIM = ["--n1", "4", "--n2", "2", "--n3", "6", "--K", "2", "--paths", "3", "--drops", "2"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.strip().split("\n")
    head = lines[0].split(",")
    return [dict(zip(head, line.split(","))) for line in lines[1:]]


def parse_pairs(text):
    return dict(line.split(",", 1) for line in text.strip().split("\n"))


def test_codeword_example_prints_half_entries(capsys):
    code, out, _ = run(capsys, "codeword", "--kind", "type1sp", "--n1", "2", "--n2", "1", "--o1", "1", "--o2", "1",
                       "--m1", "0", "--n", "0", "--n3", "1")
    assert code == 0
    rows = parse_csv(out)
    assert [int(r["port"]) for r in rows] == [0, 1, 2, 3]
    assert all(float(r["re"]) == 0.5 and float(r["im"]) == 0.0 for r in rows)


def test_codeword_invalid_m1_exits_two(capsys):
    code, out, err = run(capsys, "codeword", "--kind", "type1sp", "--n1", "2", "--n2", "1", "--o1", "1", "--o2", "1",
                         "--m1", "7", "--n", "0")
    assert code == 2
    assert out == "" and len(err.strip().split("\n")) == 1


def test_codeword_type2_matches_library(capsys):
    cfg = AntennaConfig(4, 2, 4, 4)
    k1 = (7, 6, 0, 0, 0, 0, 0, 0)
    phases = (0, 3, 0, 0, 0, 0, 0, 0)
    pmi = t2.PmiType2(q1=1, q2=2, i12=0, i13=(0,), i14=(k1,), i21=((phases,) * 2,), i22=None)
    code, out, _ = run(capsys, "codeword", "--kind", "type2", "--L", "4", "--n3", "2", "--pmi", cli.pmi_to_json(pmi))
    assert code == 0
    w = t2.decode_type2(pmi, cfg, 1, 4, 0, 8, 2)
    rows = parse_csv(out)
    got = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows]).reshape(2, 1, cfg.n_ap).transpose(0, 2, 1)
    np.testing.assert_allclose(got, w, atol=1e-8)


def test_encode_then_decode_matches_library(capsys):
    code, out, _ = run(capsys, "encode", "--kind", "etype2", "--n3", "8", "--seed", "4")
    assert code == 0
    info = parse_pairs(out)
    book = cb.EType2(AntennaConfig(4, 2, 4, 4), cli.RunConfig(n3=8).codebook(CodebookKind.ETYPE2).params, n_psk=4)
    pmi = cli.pmi_from_json(CodebookKind.ETYPE2, info["pmi"])
    assert book.serialize(pmi).hex() == info["payload"]
    assert int(info["indicator_count"]) == book.indicator_count(pmi)
    code, out, _ = run(capsys, "decode", "--kind", "etype2", "--n3", "8", "--payload", info["payload"])
    assert code == 0
    vals = np.array([float(r["re"]) + 1j * float(r["im"]) for r in parse_csv(out)])
    np.testing.assert_allclose(vals, book.decode(pmi).transpose(0, 2, 1).ravel(), atol=1e-8)


@pytest.mark.parametrize("kind", [k.value for k in CodebookKind])
def test_roundtrip_is_identical(capsys, kind):
    extra = ["--rank", "1", "--n3", "8"]
    if kind == "type1mp":
        extra += ["--ng", "2", "--n1", "2", "--n2", "1", "--o2", "1"]
    code, out, _ = run(capsys, "roundtrip", "--kind", kind, *extra)
    assert code == 0, out
    info = parse_pairs(out)
    assert info["identical"] == "True"
    assert 0 <= float(info["nmse"]) < 2
    assert int(info["serialized_bits"]) >= int(info["indicator_count"])


def test_roundtrip_overhead_equals_overhead_count(capsys):
    code, out, _ = run(capsys, "encode", "--kind", "type2", "--n3", "10", "--seed", "2")
    pmi = cli.pmi_from_json(CodebookKind.TYPE2, parse_pairs(out)["pmi"])
    rep = t2.compressed_report(pmi, 0)
    expected = overhead_count("type2", rank=1, n_3=10, i_s=0, m_nz=rep.m_nz)
    code, out, _ = run(capsys, "roundtrip", "--kind", "type2", "--n3", "10", "--seed", "2")
    assert code == 0
    assert int(parse_pairs(out)["indicator_count"]) == expected


def test_overhead_table_matches_library(capsys):
    code, out, _ = run(capsys, "overhead", "--n3", "8", "--kinds", "type1sp", "type2", "etype2", "fetype2ps")
    assert code == 0
    rows = {r["kind"]: r for r in parse_csv(out)}
    assert int(rows["type1sp"]["indicator_count"]) == overhead_count("type1sp", rank=1, n_3=8) == 10
    assert int(rows["type1sp"]["complexity_ops"]) == 16
    assert int(rows["fetype2ps"]["indicator_count"]) == overhead_count("fetype2ps", rank=1, n_beams=4, m=1, n_big=2)
    assert set(rows) == {"type1sp", "type2", "etype2", "fetype2ps"}


def test_simulate_is_byte_identical_across_runs(tmp_path, capsys):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        code, _, _ = run(capsys, "simulate", *SIM, "--kinds", "genie", "type1sp", "--seed", "3", "-o", str(path))
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    rows = parse_csv(outs[0].decode())
    assert [r["kind"] for r in rows] == ["genie", "type1sp"]
    assert float(rows[0]["mean_se"]) >= float(rows[1]["mean_se"])


def test_simulate_three_beta_rows(capsys):
    rows = []
    for beta in ("1/4", "1/2", "3/4"):
        code, out, _ = run(capsys, "simulate", *SIM, "--kinds", "etype2", "--beta", beta, "--n-psk", "16")
        assert code == 0
        rows += parse_csv(out)
    assert [r["beta"] for r in rows] == ["1/4", "1/2", "3/4"]


def test_simulate_rejects_zero_drops(capsys):
    code, out, err = run(capsys, "simulate", *SIM[:-2], "--drops", "0", "--kinds", "type1sp")
    assert code == 2 and out == "" and "drops" in err


def test_io_failure_exits_one(tmp_path, capsys):
    target = tmp_path / "missing" / "out.csv"
    code, _, err = run(capsys, "simulate", *SIM, "--kinds", "type1sp", "-o", str(target))
    assert code == 1 and "I/O" in err


def test_config_file_with_flag_override(tmp_path, capsys):
    conf = tmp_path / "run.json"
    conf.write_text(json.dumps({"kind": "type1sp", "n1": 2, "n2": 1, "o1": 1, "o2": 1, "n3": 1}))
    code, out, _ = run(capsys, "codeword", "--config", str(conf))
    assert code == 0 and len(parse_csv(out)) == 4
    code, out, _ = run(capsys, "codeword", "--config", str(conf), "--n3", "2")
    assert code == 0 and len(parse_csv(out)) == 8
    conf.write_text(json.dumps({"kind": "type1sp", "colour": 3}))
    code, _, err = run(capsys, "codeword", "--config", str(conf))
    assert code == 2 and "colour" in err
    conf.write_text("{not json")
    code, _, _ = run(capsys, "codeword", "--config", str(conf))
    assert code == 2


def test_seed_comes_from_environment(monkeypatch, capsys):
    _, explicit, _ = run(capsys, "encode", "--kind", "type2", "--n3", "4", "--seed", "9")
    monkeypatch.setenv(cli.SEED_ENV, "9")
    _, from_env, _ = run(capsys, "encode", "--kind", "type2", "--n3", "4")
    assert explicit == from_env
    monkeypatch.setenv(cli.SEED_ENV, "ten")
    code, _, err = run(capsys, "encode", "--kind", "type2", "--n3", "4")
    assert code == 2 and cli.SEED_ENV in err


def test_bad_flags_exit_two(capsys):
    assert run(capsys, "codeword", "--kind", "type9")[0] == 2
    assert run(capsys, "encode", "--kind", "etype2", "--beta", "2/3")[0] == 2
    assert run(capsys, "codeword", "--kind", "type2")[0] == 2
    assert run(capsys)[0] == 2
