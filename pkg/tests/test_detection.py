import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fmcwspoof.detection import (
    CfarAlgorithm,
    CfarConfig,
    ca_scale,
    cfar_detect,
    cfar_threshold,
    group_detections,
    noise_estimate,
    os_pfa,
    os_solve_scale,
)
from fmcwspoof.errors import ConfigurationError
from fmcwspoof.receiver import RangeDopplerMap
from fmcwspoof.scene import RxArray
from fmcwspoof.waveforms import ChirpConfig

CA, OS = CfarAlgorithm.CA, CfarAlgorithm.OS


def brute_force_noise(cells, nc, guard, algo, k=None):
    """Reference noise estimate: explicit loop over windows."""
    n = len(cells)
    half = nc // 2
    out = np.full(n, np.nan)
    for y in range(half + guard, n - half - guard):
        ref = list(cells[y - guard - half: y - guard]) + list(cells[y + guard + 1: y + guard + 1 + half])
        assert len(ref) == nc
        out[y] = sum(ref) / nc if algo is CA else sorted(ref)[k - 1]
    return out


@pytest.mark.parametrize("nc, pfa, expected", [(1, 0.5, 1.0), (80, 0.39, 0.94716)])
def test_ca_scale(nc, pfa, expected):
    assert ca_scale(nc, pfa) == pytest.approx(expected, abs=5e-5)


@pytest.mark.parametrize("nc, pfa", [(80, 1e-3), (16, 1e-5), (2, 0.3)])
def test_ca_scale_high_precision(nc, pfa):
    exact = nc * (mpmath.power(mpmath.mpf(pfa), -mpmath.mpf(1) / nc) - 1)
    assert ca_scale(nc, pfa) == pytest.approx(float(exact), rel=1e-13)


@pytest.mark.parametrize("pfa", [0.0, 1.0, -0.1])
def test_ca_scale_domain(pfa):
    with pytest.raises(ConfigurationError):
        ca_scale(80, pfa)


def test_os_pfa_closed_form():
    assert os_pfa(4, 4, 1.0) == pytest.approx(0.2, abs=1e-15)
    assert os_pfa(4, 4, 0.0) == pytest.approx(1.0, abs=1e-15)
    assert os_pfa(4, 4, 1e-12) == pytest.approx(1.0, abs=1e-9)


def test_os_pfa_monte_carlo():
    rng = np.random.default_rng(3)
    trials = 200_000
    ref = rng.exponential(size=(trials, 80))
    kth = np.partition(ref, 59, axis=1)[:, 59]
    cut = rng.exponential(size=trials)
    empirical = np.mean(cut > 6.0 * kth)
    predicted = os_pfa(80, 60, 6.0)
    assert 0 < predicted < 1
    assert empirical == pytest.approx(predicted, rel=0.05)


@given(st.floats(0.01, 50.0))
def test_os_pfa_decreasing_in_scale(sc):
    assert os_pfa(80, 60, sc * 1.01) < os_pfa(80, 60, sc)


@pytest.mark.parametrize("k", [0, 5])
def test_os_invalid_order(k):
    with pytest.raises(ConfigurationError):
        os_pfa(4, k, 1.0)


def test_os_solve_scale_examples():
    assert os_solve_scale(4, 4, 0.2) == pytest.approx(1.0, abs=1e-9)
    sc = os_solve_scale(80, 60, 0.39)
    assert abs(os_pfa(80, 60, sc) - 0.39) <= 1e-10


@settings(max_examples=40)
@given(st.integers(1, 40).flatmap(lambda nc: st.tuples(st.just(2 * nc), st.integers(1, 2 * nc))),
       st.floats(0.05, 20.0))
def test_os_round_trip(nc_k, s):
    nc, k = nc_k
    p = os_pfa(nc, k, s)
    if not 1e-12 < p < 1 - 1e-12:
        return
    assert abs(os_pfa(nc, k, os_solve_scale(nc, k, p)) - p) <= 1e-10


@pytest.mark.parametrize("kwargs", [
    {"nc": 7}, {"nc": 0}, {"guard": 0}, {"pfa": 1.0}, {"pfa": 0.0},
    {"algorithm": "OS", "nc": 8, "k": 9}, {"algorithm": "OS", "nc": 8, "k": 0}, {"sc": -1.0},
])
def test_cfar_config_invariants(kwargs):
    with pytest.raises(ConfigurationError):
        CfarConfig(**kwargs)


def test_cfar_config_defaults():
    cfg = CfarConfig(OS)
    assert cfg.order == 60 and cfg.nc == 80 and cfg.guard == 1
    assert CfarConfig(OS, sc=0.95).scale == 0.95
    assert CfarConfig(CA).scale == pytest.approx(0.94716, abs=5e-5)


def test_all_equal_cells_never_flagged():
    assert not cfar_detect(np.full(300, 2.0), CfarConfig(CA, nc=16, sc=1.5)).any()


@pytest.mark.parametrize("algo", [CA, OS])
def test_single_spike_flagged_alone(algo):
    cells = np.ones(400)
    cells[200] = 100.0
    cfg = CfarConfig(algo, nc=80, guard=2, sc=ca_scale(80, 1e-3))
    assert np.flatnonzero(cfar_detect(cells, cfg)).tolist() == [200]


def test_sub_unity_scale_flags_flat_floor():
    cells = np.ones(400)
    cells[200] = 100.0
    flags = cfar_detect(cells, CfarConfig(CA, nc=80, guard=2, sc=0.95))
    assert flags.sum() > 1


def test_ca_and_os_agree_on_isolated_spike_in_noise():
    rng = np.random.default_rng(1)
    cells = rng.exponential(size=1000) * 0.01 + 1.0
    cells[500] = 200.0
    sc = 5.0
    a = cfar_detect(cells, CfarConfig(CA, nc=32, sc=sc))
    b = cfar_detect(cells, CfarConfig(OS, nc=32, sc=sc))
    assert np.array_equal(a, b) and a[500]


def test_masking_two_close_spikes():
    cells = np.ones(400)
    cells[200], cells[203] = 100.0, 30.0
    ca = cfar_detect(cells, CfarConfig(CA, nc=16, pfa=1e-3))
    os_ = cfar_detect(cells, CfarConfig(OS, nc=16, pfa=1e-3))
    assert os_[200] and os_[203]
    assert ca[200] and not ca[203]
    for algo, flags in ((CA, ca), (OS, os_)):
        cfg = CfarConfig(algo, nc=16, pfa=1e-3)
        ref = brute_force_noise(cells, 16, 1, algo, cfg.order)
        with np.errstate(invalid="ignore"):
            assert np.array_equal(flags, cells > cfg.scale * ref)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.integers(40, 200), elements=st.floats(0, 1e6)),
       st.sampled_from([CA, OS]), st.sampled_from([(4, 1), (8, 2), (16, 1), (20, 3)]))
def test_noise_estimate_matches_brute_force(cells, algo, window):
    nc, guard = window
    if cells.size <= nc + 2 * guard:
        return
    cfg = CfarConfig(algo, nc=nc, guard=guard, pfa=0.01)
    fast = noise_estimate(cells, cfg)
    slow = brute_force_noise(cells, nc, guard, algo, cfg.order)
    np.testing.assert_array_equal(np.isnan(fast), np.isnan(slow))
    ok = ~np.isnan(slow)
    np.testing.assert_allclose(fast[ok], slow[ok], rtol=1e-12, atol=0)


@settings(max_examples=30)
@given(arrays(np.float64, 120, elements=st.floats(0, 100)), st.sampled_from([CA, OS]))
def test_minimum_range_invariant(cells, algo):
    cfg = CfarConfig(algo, nc=16, guard=2, sc=0.5)
    idx = np.flatnonzero(cfar_detect(cells, cfg))
    assert np.all(idx >= cfg.min_index) and np.all(idx < cells.size - cfg.min_index)


@settings(max_examples=30)
@given(arrays(np.float64, 150, elements=st.floats(0, 100)), st.floats(0.1, 10), st.floats(1.0, 3.0),
       st.sampled_from([CA, OS]))
def test_scale_monotonicity(cells, sc, factor, algo):
    low = cfar_detect(cells, CfarConfig(algo, nc=16, sc=sc))
    high = cfar_detect(cells, CfarConfig(algo, nc=16, sc=sc * factor))
    assert not np.any(high & ~low)


def test_threshold_is_scale_times_estimate():
    cells = np.random.default_rng(0).exponential(size=100)
    cfg = CfarConfig(CA, nc=8, pfa=0.1)
    np.testing.assert_array_equal(cfar_threshold(cells, cfg), cfg.scale * noise_estimate(cells, cfg))


def test_input_validation():
    with pytest.raises(ConfigurationError):
        cfar_detect(np.ones(18), CfarConfig(CA, nc=16))
    with pytest.raises(ConfigurationError):
        cfar_detect(-np.ones(100), CfarConfig(CA, nc=16))


def _map(power_rd):
    n_r, n_v = power_rd.shape
    spectrum = np.sqrt(power_rd)[:, :, None].astype(complex) * np.ones(4)[None, None, :]
    return RangeDopplerMap(spectrum, np.arange(n_r) * 0.15, (np.arange(n_v) - n_v // 2) * 0.01)


CH = ChirpConfig()
RX = RxArray(4, CH.wavelength / 2)


def test_group_no_flags():
    m = _map(np.ones((20, 8)))
    assert group_detections(m, np.zeros((20, 8), bool), "CA", CH, RX) == []


def test_group_blob_is_one_detection_at_centroid():
    p = np.ones((20, 8))
    p[5, 4], p[6, 4], p[6, 5] = 1.0, 2.0, 1.0
    flags = np.zeros((20, 8), bool)
    flags[5, 4] = flags[6, 4] = flags[6, 5] = True
    dets = group_detections(_map(p), flags, "CA", CH, RX)
    assert len(dets) == 1
    d = dets[0]
    assert (d.range_bin, d.velocity_bin, d.n_cells) == (6, 4, 3)
    assert d.range_m == pytest.approx((5 * 1 + 6 * 2 + 6 * 1) / 4 * 0.15)
    assert d.velocity_mps == pytest.approx(((4 + 8 + 5) / 4 - 4) * 0.01)
    assert d.azimuth == pytest.approx(0.0, abs=1e-12)


def test_group_separated_blobs():
    flags = np.zeros((20, 8), bool)
    flags[5, 4] = flags[7, 4] = True
    assert len(group_detections(_map(np.ones((20, 8))), flags, "OS", CH, RX)) == 2
    flags[6, 5] = True  # diagonal neighbours join both
    assert len(group_detections(_map(np.ones((20, 8))), flags, "OS", CH, RX)) == 1


def test_group_shape_mismatch():
    with pytest.raises(ConfigurationError):
        group_detections(_map(np.ones((20, 8))), np.zeros((8, 20), bool), "CA", CH, RX)


def test_group_resolves_two_angles_in_one_cell():
    rx = RxArray(16, CH.wavelength / 2)
    m = np.arange(16)
    s1, s2 = 0.3, -0.3
    snap = np.exp(1j * math.pi * m * s1) + np.exp(1j * math.pi * m * s2)
    spectrum = np.zeros((20, 8, 16), complex)
    spectrum[10, 4] = snap
    rd = RangeDopplerMap(spectrum, np.arange(20) * 0.15, (np.arange(8) - 4) * 0.01)
    flags = np.zeros((20, 8), bool)
    flags[10, 4] = True
    dets = group_detections(rd, flags, "CA", CH, rx)
    assert [round(math.sin(d.azimuth), 2) for d in dets] == [-0.3, 0.3]
