import cmath
import math
import statistics

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from speechdur.errors import EmptySpectrum, InconsistentChannelSets, TooFewSamples
from speechdur.features import (
    CHANNEL_FEATURES,
    FeatureMatrix,
    MagnitudeSpectrum,
    build_matrix,
    channels_from_layout,
    feature_layout,
    featurize_window,
    freq_stats,
    read_matrix_csv,
    spectrum,
    time_stats,
    write_matrix_csv,
)
from speechdur.fft import fft
from speechdur.signal import ACCEL_CHANNELS, Channel, WindowSegment

RATE = 8.0


def naive_dft(x):
    n = len(x)
    return [sum(x[t] * cmath.exp(-2j * math.pi * k * t / n) for t in range(n)) for k in range(n)]


def window(channels, n=48, seed=0):
    rng = np.random.default_rng(seed)
    return WindowSegment(0.0, n / RATE, {c: rng.normal(size=n) for c in channels})


# ---------------------------------------------------------------- time_stats

def test_time_stats_constant():
    np.testing.assert_array_equal(time_stats([5, 5, 5, 5]), [5, 5, 5, 0, 0, 0])


def test_time_stats_against_oracle():
    x = [1, 2, 3, 4]
    mx, mn, mean, std, skew, kurt = time_stats(x)
    assert (mx, mn, mean) == (4, 1, 2.5)
    assert std == pytest.approx(statistics.stdev(x), abs=1e-12)
    assert std == pytest.approx(1.29099, abs=1e-5)
    assert skew == pytest.approx(scipy.stats.skew(x, bias=True), abs=1e-12)
    assert kurt == pytest.approx(scipy.stats.kurtosis(x, fisher=True, bias=True), abs=1e-12)


def test_time_stats_right_tail():
    skew = time_stats([0, 0, 0, 10])[4]
    assert skew > 0
    assert skew == pytest.approx(scipy.stats.skew([0, 0, 0, 10]), abs=1e-12)


def test_time_stats_too_short():
    with pytest.raises(TooFewSamples):
        time_stats([1.0])


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(float, st.integers(2, 64), elements=st.floats(-1e3, 1e3)))
def test_time_stats_match_scipy(x):
    ours = time_stats(x)
    assert ours[3] == pytest.approx(np.std(x, ddof=1), rel=1e-9, abs=1e-12)
    if np.ptp(x) > 1e-6 * max(1.0, np.max(np.abs(x))):
        assert ours[4] == pytest.approx(scipy.stats.skew(x), rel=1e-6, abs=1e-8)
        assert ours[5] == pytest.approx(scipy.stats.kurtosis(x), rel=1e-6, abs=1e-8)


# ---------------------------------------------------------------- fft / spectrum

@pytest.mark.parametrize("n", [1, 2, 3, 5, 7, 12, 17, 48, 60, 64, 97])
def test_fft_matches_naive_dft(n):
    x = np.random.default_rng(n).normal(size=n)
    np.testing.assert_allclose(fft(x), naive_dft(list(x)), rtol=0, atol=1e-9)


def test_spectrum_on_bin_sinusoid():
    n, k = 48, 5
    t = np.arange(n) / RATE
    spec = spectrum(np.cos(2 * np.pi * (RATE / n) * k * t), RATE)
    assert spec.resolution == RATE / n
    np.testing.assert_allclose(spec.bin_frequencies, np.arange(25) * RATE / n)
    others = np.delete(spec.magnitudes, k)
    assert np.all(others < 1e-9 * spec.magnitudes[k])


def test_spectrum_of_zeros():
    assert np.all(spectrum(np.zeros(48), RATE).magnitudes == 0)


def test_spectrum_random_48_matches_naive():
    x = np.random.default_rng(48).normal(size=48)
    oracle = np.abs(naive_dft(list(x)))[:25]
    assert np.max(np.abs(spectrum(x, RATE).magnitudes - oracle)) < 1e-9


def test_spectrum_too_short():
    with pytest.raises(TooFewSamples):
        spectrum(np.zeros(7), RATE)


# ---------------------------------------------------------------- freq_stats

def sinusoid(freq, n=48):
    t = np.arange(n) / RATE
    return np.sin(2 * np.pi * freq * t)


def test_peak_frequency_on_bin():
    # 48 samples at 8 Hz: bin 2 is 1/3 Hz
    fs = freq_stats(spectrum(sinusoid(1 / 3), RATE))
    assert fs[6] == pytest.approx(1 / 3, abs=1e-12)


def test_peak_frequency_out_of_band():
    assert freq_stats(spectrum(sinusoid(1.0), RATE))[6] == 0.0


def test_freq_stats_all_zero():
    np.testing.assert_array_equal(freq_stats(spectrum(np.zeros(48), RATE)), np.zeros(8))


def test_freq_stats_needs_two_bins():
    spec = MagnitudeSpectrum(np.array([0.0, 1.0]), np.array([1.0, 1.0]), 1.0)
    with pytest.raises(EmptySpectrum):
        freq_stats(spec)


def test_monotone_spectrum_has_no_peak():
    mags = np.linspace(10, 1, 25)
    spec = MagnitudeSpectrum(np.arange(25) / 6, mags, 1 / 6)
    assert freq_stats(spec)[6] == 0.0


def test_centroid_and_stats_skip_dc():
    freqs = np.arange(25) / 6
    mags = np.zeros(25)
    mags[0] = 100.0
    mags[3] = 2.0
    mags[6] = 2.0
    out = freq_stats(MagnitudeSpectrum(freqs, mags, 1 / 6))
    assert out[0] == 2.0  # f_max ignores the DC bin
    assert out[7] == pytest.approx((3 / 6 + 6 / 6) / 2)
    np.testing.assert_allclose(out[:6], time_stats(mags[1:]))


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(float, st.sampled_from([48, 64]), elements=st.floats(-50, 50)))
def test_peak_frequency_in_band_or_zero(x):
    peak = freq_stats(spectrum(x, RATE))[6]
    assert peak == 0.0 or 0.13 <= peak <= 0.66


SCALED = [0, 1, 2, 3, 6, 7, 8, 9]
INVARIANT = [4, 5, 10, 11, 12, 13]


def pressure_features(x):
    return featurize_window(WindowSegment(0, 6, {Channel.PRESSURE: x}), RATE).values


# power-of-two factors scale exactly, so even tie-laden spectra keep their peak bin;
# that holds for normal floats only, hence no values near the subnormal range
NORMAL = st.floats(-10, 10).filter(lambda v: v == 0 or abs(v) > 1e-200)


@settings(max_examples=60, deadline=None)
@given(hnp.arrays(float, 48, elements=NORMAL), st.integers(-20, 20))
def test_amplitude_scaling_exact(x, e):
    c = 2.0 ** e
    a, b = pressure_features(x), pressure_features(c * x)
    np.testing.assert_array_equal(b[SCALED], c * a[SCALED])
    np.testing.assert_array_equal(b[INVARIANT], a[INVARIANT])


@pytest.mark.parametrize("c", [0.013, 0.7, 3.3, 250.0])
def test_amplitude_scaling_generic(c):
    rng = np.random.default_rng(int(c * 1000))
    for _ in range(25):
        x = rng.normal(size=48) + np.sin(2 * np.pi * 0.3 * np.arange(48) / RATE)
        a, b = pressure_features(x), pressure_features(c * x)
        np.testing.assert_allclose(b[SCALED], c * a[SCALED], rtol=1e-9, atol=0)
        np.testing.assert_allclose(b[INVARIANT], a[INVARIANT], rtol=1e-7, atol=1e-9)


# ---------------------------------------------------------------- layout / matrices

@pytest.mark.parametrize("channels, width", [
    ((Channel.PRESSURE,), 14),
    (ACCEL_CHANNELS, 42),
    ((Channel.PRESSURE, *ACCEL_CHANNELS), 56),
])
def test_feature_vector_width(channels, width):
    v = featurize_window(window(channels), RATE)
    assert v.values.shape == (width,)
    assert len(v.layout) == width == len(set(v.layout))
    assert v.layout[:14] == tuple(f"{channels[0].value}_{f}" for f in CHANNEL_FEATURES)
    assert channels_from_layout(v.layout) == channels


def test_channel_blocks_follow_fixed_order():
    w = window((Channel.ACCEL_Z, Channel.PRESSURE))
    v = featurize_window(w, RATE)
    assert v.layout[0] == "pressure_max" and v.layout[14] == "accel_z_max"


def test_build_matrix_shape():
    chans = (Channel.PRESSURE, *ACCEL_CHANNELS)
    m = build_matrix([window(chans, seed=i) for i in range(13)], RATE)
    assert m.shape == (13, 56)
    assert m.columns == feature_layout(chans)


def test_build_matrix_empty_with_columns():
    m = build_matrix([], RATE, channels=(Channel.PRESSURE,))
    assert m.shape == (0, 14)
    assert len(m.columns) == 14


def test_build_matrix_inconsistent():
    with pytest.raises(InconsistentChannelSets):
        build_matrix([window((Channel.PRESSURE,)), window(ACCEL_CHANNELS)], RATE)


def test_matrix_csv_round_trip(tmp_path):
    m = build_matrix([window((Channel.PRESSURE,), seed=i) for i in range(3)], RATE)
    path = tmp_path / "m.csv"
    write_matrix_csv(path, m, labels=[0, 1, 1])
    header = path.read_text().splitlines()[0].split(",")
    assert header[0] == "start_time" and header[-1] == "label" and len(header) == 16
    back, labels = read_matrix_csv(path)
    np.testing.assert_array_equal(back.values, m.values)
    assert back.columns == m.columns
    assert labels.tolist() == [0, 1, 1]


def test_concat_rejects_mixed_layouts():
    a = build_matrix([window((Channel.PRESSURE,))], RATE)
    b = build_matrix([window(ACCEL_CHANNELS)], RATE)
    with pytest.raises(InconsistentChannelSets):
        FeatureMatrix.concat([a, b])
