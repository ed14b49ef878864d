import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nrcodebook import _kernels

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba backend unavailable")


def random_inputs(rng, n_t, n_r, n_b, n_g, n_c):
    proj = rng.standard_normal((n_t, n_r, n_b, n_g)) + 1j * rng.standard_normal((n_t, n_r, n_b, n_g))
    coeffs = np.exp(2j * np.pi * rng.integers(0, 4, (n_c, n_b)) / 4)
    return proj, coeffs


def test_numpy_metric_matches_direct_loop():
    rng = np.random.default_rng(0)
    proj, coeffs = random_inputs(rng, 2, 2, 3, 5, 4)
    out = _kernels.cophase_metric_numpy(proj, coeffs)
    for t in range(2):
        for c in range(4):
            for g in range(5):
                y = coeffs[c] @ proj[t, :, :, g].T
                assert abs(out[t, c, g] - np.sum(np.abs(y) ** 2)) < 1e-12


@needs_numba
@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 3), st.sampled_from([2, 4]), st.integers(1, 40))
@settings(max_examples=30, deadline=None)
def test_backends_agree(seed, n_t, n_r, n_b, n_g):
    proj, coeffs = random_inputs(np.random.default_rng(seed), n_t, n_r, n_b, n_g, 4)
    np.testing.assert_allclose(
        _kernels.cophase_metric_numba(proj, coeffs), _kernels.cophase_metric_numpy(proj, coeffs), rtol=1e-12, atol=1e-12
    )


def _probe(env_value):
    env = dict(os.environ)
    env.pop("NRCB_DISABLE_NUMBA", None)
    if env_value is not None:
        env["NRCB_DISABLE_NUMBA"] = env_value
    code = (
        "import json\n"
        "from nrcodebook import _kernels\n"
        "from nrcodebook.type1 import encode_type1_sp\n"
        "from nrcodebook.beamgrid import AntennaConfig\n"
        "from nrcodebook.channel import gen_channel\n"
        "cfg = AntennaConfig(4, 2, 4, 4)\n"
        "pmi = encode_type1_sp(gen_channel(cfg, 2, 5, seed=3).h, cfg, 1)\n"
        "print(json.dumps([_kernels.HAVE_NUMBA, _kernels.cophase_metric.__name__, pmi.i11, pmi.i12, list(pmi.i2)]))\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_env_flag_selects_numpy_and_results_match():
    fallback = _probe("1")
    assert fallback[:2] == [False, "cophase_metric_numpy"]
    default = _probe(None)
    if default[0]:
        assert default[1] == "cophase_metric_numba"
    assert default[2:] == fallback[2:]
