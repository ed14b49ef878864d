import numpy as np
import pytest
from conftest import grid_channel

from nrcodebook import chansim as cs
from nrcodebook.beamgrid import AntennaConfig
from nrcodebook.type1 import phi

CFG = AntennaConfig(4, 2, 4, 4)
SMALL = cs.SimConfig(cfg=CFG, n_rx=2, n_3=8, n_users=2, n_paths=4, snr_db=10.0, n_ul=2)
SCHEMES = [
    cs.SchemeSpec(cs.GENIE),
    cs.SchemeSpec("type1sp"),
    cs.SchemeSpec("type2", n_beams=2),
    cs.SchemeSpec("etype2", n_beams=2, p_v="1/4", beta="1/2", n_psk=16),
    cs.SchemeSpec("fetype2ps", label="fe_eig", n_ports=8, alpha="1/2", n_psk=16),
]


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_single_user_codeword_channel_matches_closed_form(n):
    # the second polarization carries conj(phi_n) so the matched codeword has co-phase n
    dl = grid_channel(CFG, [(3, 2)], delays=[2], gains=[1.5], xpol=[np.conj(phi(n))], n_rx=1, n_3=4)
    snr_db = 10.0
    se = cs.evaluate_se([dl], cs.SchemeSpec("type1sp"), snr_db)
    snr = 10 ** (snr_db / 10)
    norms = np.linalg.norm(dl.h[0], axis=0) ** 2
    assert abs(se - np.mean(np.log2(1 + snr * norms))) < 1e-6


def test_orthogonal_users_see_no_interference():
    rows = np.zeros((2, 3, 4), complex)
    rows[0, :, 0] = [1.0, 2.0, 0.5]
    rows[1, :, 2] = [1j, 1.0, 3.0]
    snr = 10.0
    se = cs.rzf_se(rows, rows.conj() / np.linalg.norm(rows, axis=2, keepdims=True), snr)
    expected = np.mean(np.log2(1 + snr / 2 * np.abs(rows).sum(axis=2) ** 2), axis=1)
    np.testing.assert_allclose(se, expected, atol=1e-12)


def test_results_do_not_depend_on_worker_count():
    a = cs.evaluate(SCHEMES[:3], SMALL, drops=3, seed=5, n_jobs=1)
    b = cs.evaluate(SCHEMES[:3], SMALL, drops=3, seed=5, n_jobs=2)
    for x, y in zip(a, b):
        assert np.array_equal(x.per_drop, y.per_drop)
        assert (x.mean_se, x.ci95, x.overhead_bits) == (y.mean_se, y.ci95, y.overhead_bits)


def test_same_seed_same_results_and_different_seed_differs():
    a = cs.evaluate(SCHEMES[:2], SMALL, drops=2, seed=1)
    b = cs.evaluate(SCHEMES[:2], SMALL, drops=2, seed=1)
    c = cs.evaluate(SCHEMES[:2], SMALL, drops=2, seed=2)
    assert [r.mean_se for r in a] == [r.mean_se for r in b]
    assert [r.mean_se for r in a] != [r.mean_se for r in c]


def test_sweep_over_beta_gives_three_rows():
    schemes = [cs.SchemeSpec("etype2", n_beams=2, p_v="1/4", beta=b, n_psk=16) for b in ("1/4", "1/2", "3/4")]
    rows = cs.sweep(schemes, SMALL, drops=2, seed=3)
    assert [r["beta"] for r in rows] == ["1/4", "1/2", "3/4"]
    assert all(r["M_v"] == 2 and r["L"] == 2 and r["drops"] == 2 for r in rows)
    bits = [r["overhead_bits"] for r in rows]
    assert bits[0] <= bits[1] <= bits[2]
    text = cs.rows_to_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == ",".join(cs.CSV_FIELDS)
    assert len(lines) == 4


def test_single_config_sweep_equals_direct_evaluation():
    spec = cs.SchemeSpec("type2", n_beams=2)
    (row,) = cs.sweep([spec], SMALL, drops=1, seed=8)
    users = cs.draw_users(SMALL, 8, 0)
    direct = cs.evaluate_se([u.dl for u in users], spec, SMALL.snr_db, ul=[u.ul for u in users])
    assert row["mean_se"] == direct


def test_genie_bounds_every_scheme_on_every_drop():
    results = cs.evaluate(SCHEMES, SMALL, drops=6, seed=11)
    genie = results[0].per_drop
    for res in results[1:]:
        assert np.all(genie >= res.per_drop - 1e-12), res.kind
        assert res.mean_se >= 0 and res.ci95 >= 0 and res.overhead_bits > 0


def test_invalid_requests_rejected():
    with pytest.raises(ValueError):
        cs.evaluate(SCHEMES, SMALL, drops=0)
    with pytest.raises(ValueError):
        cs.evaluate([], SMALL, drops=1)
    with pytest.raises(ValueError):
        cs.SimConfig(cfg=CFG, n_users=CFG.n_ap + 1)
    with pytest.raises(ValueError):
        cs.evaluate_se([], cs.SchemeSpec("type1sp"), 10.0)
    with pytest.raises(ValueError):
        cs.SchemeSpec("type3")


def test_bootstrap_interval():
    lo, hi = cs.bootstrap_diff_ci([3.0, 3.0, 3.0], [1.0, 1.0, 1.0])
    assert lo == hi == 2.0
    rng = np.random.default_rng(0)
    a = rng.normal(1.0, 1.0, 400)
    lo, hi = cs.bootstrap_diff_ci(a, np.zeros(400), seed=1)
    assert lo < a.mean() < hi and hi - lo < 0.4
    with pytest.raises(ValueError):
        cs.bootstrap_diff_ci([1.0], [0.0])


def test_csv_numbers_have_nine_significant_digits():
    row = dict.fromkeys(cs.CSV_FIELDS, "")
    row.update(kind="type2", mean_se=1 / 3, ci95=0.0, drops=1)
    line = cs.rows_to_csv([row]).split("\n")[1]
    assert "0.333333333" in line and "0.3333333333" not in line
