import numpy as np
import pytest
from conftest import grid_channel
from hypothesis import given, settings
from hypothesis import strategies as st

from nrcodebook.beamgrid import AntennaConfig, dft_beam
from nrcodebook.channel import ChannelRealization, PathSet, gen_channel, gen_ul_from_dl

CFG = AntennaConfig(4, 2, 4, 4)


def pol_covariance(h, n_elem):
    """Spatial covariance summed over rx, polarizations and subbands."""
    x = h.reshape(h.shape[0], -1, n_elem, h.shape[2])
    return np.einsum("rpet,rpft->ef", x, x.conj())


def top_subspace(cov, k):
    _, vecs = np.linalg.eigh(cov)
    return vecs[:, ::-1][:, :k]


def subspace_distance(a, b):
    """Sine of the largest principal angle between two orthonormal bases."""
    return float(np.linalg.norm(a @ a.conj().T - b @ b.conj().T, 2))


def test_single_on_grid_path_is_rank_one_and_flat():
    dl = grid_channel(CFG, [(5, 2)], n_rx=2, n_3=6)
    h = dl.h
    for t in range(1, 6):
        np.testing.assert_allclose(h[:, :, t], h[:, :, 0], atol=1e-12)
    s = np.linalg.svd(h.reshape(2, -1), compute_uv=False)
    assert s[1] < 1e-10 * s[0]
    # the element response is the conjugate of the matching grid beam
    np.testing.assert_allclose(h[0, : CFG.n_elem, 0].conj(), dft_beam(CFG, 5, 2), atol=1e-12)


def test_two_taps_give_period_two_ripple():
    paths = PathSet.on_grid(CFG, [(0, 0), (4, 0)], delays=[0, 4], gains=[0.8, 0.6j])
    h = gen_channel(CFG, 1, 8, paths=paths).h
    mag = np.abs(h)
    np.testing.assert_allclose(mag[..., 2:], mag[..., :-2], atol=1e-12)
    assert np.max(np.abs(mag[..., 1] - mag[..., 0])) > 0.1
    # closed form on the first antenna, where both spatial terms are 1
    t = np.arange(8)
    np.testing.assert_allclose(h[0, 0], 0.8 + 0.6j * np.exp(-1j * np.pi * t), atol=1e-12)


def test_same_seed_is_bit_identical():
    a = gen_channel(CFG, 2, 13, seed=[3, 1])
    b = gen_channel(CFG, 2, 13, seed=[3, 1])
    c = gen_channel(CFG, 2, 13, seed=[3, 2])
    assert np.array_equal(a.h, b.h)
    assert not np.array_equal(a.h, c.h)


def test_power_is_conserved_on_average():
    n_rx, n_3 = 2, 8
    power = [np.sum(np.abs(gen_channel(CFG, n_rx, n_3, seed=[7, s]).h) ** 2) / n_3 for s in range(1000)]
    assert abs(np.mean(power) / (n_rx * CFG.n_ap) - 1) < 0.02


@given(st.integers(0, 2**31), st.integers(1, 8))
@settings(max_examples=30, deadline=None)
def test_path_gains_are_normalized(seed, n_paths):
    dl = gen_channel(CFG, 1, 4, seed=seed, n_paths=n_paths)
    assert abs(np.sum(np.abs(dl.paths.gain) ** 2) - 1) < 1e-12
    assert np.all((dl.paths.delay >= 0) & (dl.paths.delay < 1))


def test_single_path_uplink_shares_the_subspace():
    for seed in range(10):
        dl = gen_channel(CFG, 2, 13, seed=seed, n_paths=1)
        ul = gen_ul_from_dl(dl, seed=seed + 100)
        a = top_subspace(pol_covariance(dl.h, CFG.n_elem), 1)
        b = top_subspace(pol_covariance(ul.h, CFG.n_elem), 1)
        assert subspace_distance(a, b) < 1e-9


def test_four_path_uplink_covariance_shares_eigenvectors():
    for seed in range(10):
        dl = gen_channel(CFG, 2, 13, seed=seed, n_paths=4)
        ul = gen_ul_from_dl(dl, seed=seed + 100)
        a = top_subspace(pol_covariance(dl.h, CFG.n_elem), 4)
        b = top_subspace(pol_covariance(ul.h, CFG.n_elem), 4)
        assert subspace_distance(a, b) < 0.05


def test_uplink_keeps_angles_delays_and_jitter_bound():
    dl = gen_channel(CFG, 2, 13, seed=4)
    ul = gen_ul_from_dl(dl, seed=5)
    for name in ("azimuth", "zenith", "delay", "aoa"):
        np.testing.assert_array_equal(getattr(ul.paths, name), getattr(dl.paths, name))
    ratio_db = 20 * np.log10(np.abs(ul.paths.gain) / np.abs(dl.paths.gain))
    assert np.ptp(ratio_db) <= 1.0 + 1e-9
    assert not np.allclose(np.angle(ul.paths.gain), np.angle(dl.paths.gain))


def test_uplink_delay_profile_peaks_at_downlink_delays():
    delays = [0, 3, 7, 12]
    paths = PathSet.on_grid(CFG, [(1, 0), (6, 1), (12, 3), (3, 2)], delays, gains=[0.6, 0.5, 0.45, 0.43])
    dl = gen_channel(CFG, 2, 16, paths=paths)
    for seed in range(5):
        ul = gen_ul_from_dl(dl, seed=seed)
        profile = np.sum(np.abs(np.fft.ifft(ul.h, axis=2)) ** 2, axis=(0, 1))
        assert sorted(np.argsort(profile)[::-1][:4]) == delays


def test_invalid_inputs_rejected():
    paths = PathSet.on_grid(CFG, [(0, 0)], [8])
    with pytest.raises(ValueError):
        gen_channel(CFG, 1, 8, paths=paths)
    with pytest.raises(ValueError):
        gen_channel(CFG, 0, 8, seed=1)
    with pytest.raises(ValueError):
        gen_channel(CFG, 1, 8, seed=1, n_paths=0)
    with pytest.raises(ValueError):
        gen_ul_from_dl(ChannelRealization(h=np.zeros((1, CFG.n_ap, 4), complex)))
    with pytest.raises(ValueError):
        PathSet.on_grid(CFG, [(8, 2)], [0])  # outside the visible region
