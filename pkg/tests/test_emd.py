import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.interpolate import CubicSpline as ScipySpline

from gearscale.emd import (
    STOP_CAP,
    SiftConfig,
    count_extrema,
    count_zero_crossings,
    decompose,
    envelopes,
    extract_imf,
    find_extrema,
    sift_once,
)
from gearscale.errors import DegenerateInputError, InvalidArgumentError, MonotoneSignalError

T = np.arange(1000) / 1000.0


def test_find_extrema_simple():
    x = np.array([0, 2, 1, 3, 0, 0, -1, 4])
    mx, mn = find_extrema(x)
    assert mx.tolist() == [1, 3]
    assert mn.tolist() == [2, 6]


def test_flat_plateau_counts_once():
    mx, mn = find_extrema(np.array([0, 1, 1, 1, 0, -1, -1, 0]))
    assert mx.tolist() == [1] and mn.tolist() == [5]


def test_counts_on_sine():
    x = np.sin(2 * np.pi * 5 * T + 0.3)
    assert count_extrema(x) == 10
    assert count_zero_crossings(x) == 10


def test_envelopes_bound_a_modulated_tone():
    x = (1 + 0.3 * np.cos(2 * np.pi * 2 * T)) * np.sin(2 * np.pi * 40 * T)
    up, lo = envelopes(x)
    inner = slice(50, -50)
    np.testing.assert_allclose(up[inner], (1 + 0.3 * np.cos(2 * np.pi * 2 * T))[inner], atol=0.02)
    np.testing.assert_allclose(lo[inner], -up[inner], atol=0.03)


def test_envelope_is_natural_spline_through_maxima():
    rng = np.random.default_rng(1)
    x = np.sin(2 * np.pi * 12 * T) + 0.05 * rng.normal(size=T.size)
    up, _ = envelopes(x, "clamp")
    mx, _ = find_extrema(x)
    np.testing.assert_allclose(up[mx], x[mx], atol=1e-12)
    # independent oracle: scipy spline over the same knots
    t = np.concatenate([[0.0], mx, [x.size - 1.0]])
    v = np.concatenate([[x[mx[0]]], x[mx], [x[mx[-1]]]])
    np.testing.assert_allclose(up, ScipySpline(t, v, bc_type="natural")(np.arange(x.size)), atol=1e-12)


def test_monotone_signal_has_no_envelopes():
    with pytest.raises(MonotoneSignalError):
        envelopes(np.linspace(0, 1, 100))
    with pytest.raises(MonotoneSignalError):
        sift_once(np.exp(T))


def test_sift_of_zero_series_is_degenerate():
    with pytest.raises(DegenerateInputError):
        sift_once(np.zeros(50))


def test_sd_matches_hand_formula():
    x = np.sin(2 * np.pi * 20 * T) + 0.5 * T
    h, sd = sift_once(x)
    assert sd == pytest.approx(np.sum((x - h) ** 2) / np.sum(x**2), rel=1e-12)


def test_pure_sine_is_its_own_imf():
    x = np.sin(2 * np.pi * 20 * T)
    imf, iters = extract_imf(x)
    assert iters >= 1
    assert np.corrcoef(imf, x)[0, 1] >= 0.99
    assert np.max(np.abs((x - imf)[50:-50])) < 0.05


def test_pure_tone_yields_one_imf():
    res = decompose(np.cos(2 * np.pi * 50 * T))
    assert len(res) == 1


def test_two_tones_separate_highest_first():
    x = np.sin(40 * np.pi * T) + 2 * np.cos(80 * np.pi * T)
    res = decompose(x)
    assert len(res) >= 2
    f1 = np.argmax(np.abs(np.fft.rfft(res.imfs[0])))
    f2 = np.argmax(np.abs(np.fft.rfft(res.imfs[1])))
    assert (f1, f2) == (40, 20)


def test_max_imfs_is_respected():
    rng = np.random.default_rng(2)
    res = decompose(rng.normal(size=2000), SiftConfig(max_imfs=3))
    assert len(res) == 3
    np.testing.assert_allclose(res.reconstruct(), res.imfs.sum(0) + res.residual)


def test_iteration_cap_is_flagged():
    rng = np.random.default_rng(3)
    res = decompose(rng.normal(size=1000), SiftConfig(max_sift_iters=1, sd_threshold=1e-9, max_imfs=2))
    assert res.stop_reasons == (STOP_CAP, STOP_CAP)
    assert res.sift_counts == (1, 1)


def test_constant_signal_gives_no_imfs():
    res = decompose(np.full(200, 3.0))
    assert len(res) == 0
    np.testing.assert_array_equal(res.residual, 3.0)


@pytest.mark.parametrize("kw", [dict(sd_threshold=0), dict(sd_threshold=1.5), dict(max_imfs=0), dict(boundary_policy="wrap")])
def test_sift_config_validation(kw):
    with pytest.raises(InvalidArgumentError):
        SiftConfig(**kw)


def test_imfset_csv(tmp_path):
    res = decompose(np.sin(2 * np.pi * 20 * T) + T, SiftConfig(max_imfs=2))
    path = res.to_csv(tmp_path / "imfs.csv")
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert open(path).readline().strip().split(",")[-1] == "residual"
    np.testing.assert_allclose(data.sum(axis=1), res.reconstruct(), atol=1e-12)


@given(
    st.integers(200, 1500),
    st.lists(st.tuples(st.floats(2, 150), st.floats(0.1, 3)), min_size=1, max_size=3),
    st.floats(0, 0.5),
    st.integers(0, 2**31 - 1),
)
def test_reconstruction_identity_property(n, tones, noise, seed):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / 1000.0
    x = sum(a * np.sin(2 * np.pi * f * t + rng.uniform(0, 6)) for f, a in tones) + noise * rng.normal(size=n)
    res = decompose(x)
    assert np.max(np.abs(x - res.reconstruct())) < 1e-9


@given(st.integers(300, 1200), st.integers(0, 2**31 - 1))
def test_criteria_stopped_imfs_are_valid(n, seed):
    x = np.random.default_rng(seed).normal(size=n)
    res = decompose(x)
    for imf, why in zip(res.imfs, res.stop_reasons):
        if why != STOP_CAP:
            assert abs(count_zero_crossings(imf) - count_extrema(imf)) <= 1
