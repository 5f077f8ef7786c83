"""FIR design, hyper-filter bank, derivative, extrema, and windowing tests.

Frequency-domain claims are verified through an independent transfer-function
oracle (zero-padded FFT of the taps); extrema and derivatives are checked
against brute-force / analytic oracles.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attnpipe import ppg
from attnpipe.errors import InvalidArgumentError, InvalidSpecError
from attnpipe.ppg import (
    FilterKind,
    FilterSpec,
    PpgSeries,
    apply_fir,
    apply_filter_bank,
    bank_taps,
    build_filter_bank,
    channel_taps,
    decimate,
    derivative,
    design_fir,
    detect_extrema,
    edge_transient_len,
    segment_windows,
    znormalize_rows,
)

FS = 50.0
ORDER = 501


def gain_db(taps, freq_hz, fs, nfft=65536):
    """Transfer-function oracle: magnitude at freq from a zero-padded FFT."""
    h = np.fft.rfft(taps, nfft)
    freqs = np.fft.rfftfreq(nfft, d=1.0 / fs)
    idx = int(np.argmin(np.abs(freqs - freq_hz)))
    return 20.0 * np.log10(np.abs(h[idx]) + 1e-300)


# ------------------------------------------------------------------ design

def test_lowpass_dc_gain_unity():
    taps = design_fir(FilterSpec(FilterKind.LOW_PASS, 7.0, order=ORDER), FS)
    assert taps.sum() == pytest.approx(1.0, abs=1e-9)


def test_highpass_dc_gain_zero():
    taps = design_fir(FilterSpec(FilterKind.HIGH_PASS, 0.5, order=ORDER), FS)
    assert taps.sum() == pytest.approx(0.0, abs=1e-9)


def test_bandpass_dc_gain_zero():
    taps = design_fir(FilterSpec(FilterKind.BAND_PASS, 0.5, 2.9, order=ORDER), FS)
    assert taps.sum() == pytest.approx(0.0, abs=1e-9)


def test_lowpass_stopband_attenuation():
    # 1.4 Hz low-pass: 3 Hz sits well past the transition, Hamming floor ~ -53 dB
    taps = design_fir(FilterSpec(FilterKind.LOW_PASS, 1.4, order=ORDER), FS)
    assert gain_db(taps, 3.0, FS) <= -50.0


def test_taps_symmetric_linear_phase():
    for spec in (
        FilterSpec(FilterKind.LOW_PASS, 2.5, order=101),
        FilterSpec(FilterKind.HIGH_PASS, 0.5, order=101),
        FilterSpec(FilterKind.BAND_PASS, 1.2, 7.0, order=101),
    ):
        taps = design_fir(spec, FS)
        assert np.array_equal(taps, taps[::-1])


def test_bandpass_is_cascade_of_stages():
    hp = design_fir(FilterSpec(FilterKind.HIGH_PASS, 0.5, order=101), FS)
    lp = design_fir(FilterSpec(FilterKind.LOW_PASS, 2.9, order=101), FS)
    bp = design_fir(FilterSpec(FilterKind.BAND_PASS, 0.5, 2.9, order=101), FS)
    assert bp.shape == (201,)
    assert np.allclose(bp, np.convolve(hp, lp), atol=1e-15)


def test_cutoff_at_nyquist_rejected():
    with pytest.raises(InvalidSpecError):
        design_fir(FilterSpec(FilterKind.LOW_PASS, 25.0, order=ORDER), FS)


def test_even_order_rejected():
    with pytest.raises(InvalidSpecError):
        FilterSpec(FilterKind.LOW_PASS, 5.0, order=100)


def test_bandpass_requires_increasing_cutoffs():
    with pytest.raises(InvalidSpecError):
        FilterSpec(FilterKind.BAND_PASS, 3.0, 2.0, order=101)


# ------------------------------------------------------------------ apply

def _series(x, fs=FS):
    return PpgSeries(sample_rate_hz=fs, start_time_ms=0, samples=x)


def test_constant_through_highpass_interior_zero():
    taps = design_fir(FilterSpec(FilterKind.HIGH_PASS, 0.5, order=ORDER), FS)
    out = apply_fir(_series(np.ones(2000)), taps)
    trans = edge_transient_len(ORDER)
    assert np.abs(out.samples[trans:-trans]).max() < 1e-6


def test_impulse_reproduces_taps():
    taps = design_fir(FilterSpec(FilterKind.LOW_PASS, 3.0, order=101), FS)
    x = np.zeros(301)
    x[150] = 1.0
    out = apply_fir(_series(x), taps)
    assert np.allclose(out.samples[100:201], taps, atol=1e-15)


def test_sine_attenuation_matches_transfer_oracle():
    taps = design_fir(FilterSpec(FilterKind.LOW_PASS, 1.4, order=ORDER), FS)
    t = np.arange(3000) / FS
    out = apply_fir(_series(np.sin(2 * np.pi * 3.0 * t)), taps)
    steady = out.samples[750:-750]
    assert np.abs(steady).max() <= 0.0032  # -50 dB


def test_output_length_preserved():
    taps = design_fir(FilterSpec(FilterKind.LOW_PASS, 3.0, order=101), FS)
    out = apply_fir(_series(np.random.default_rng(0).normal(size=777)), taps)
    assert len(out) == 777


@settings(max_examples=25, deadline=None)
@given(
    st.integers(min_value=0, max_value=2**32 - 1),
    st.floats(min_value=-3.0, max_value=3.0),
    st.floats(min_value=-3.0, max_value=3.0),
)
def test_apply_fir_linearity(seed, a, b):
    rng = np.random.default_rng(seed)
    taps = design_fir(FilterSpec(FilterKind.LOW_PASS, 4.0, order=51), FS)
    x = rng.normal(size=300)
    y = rng.normal(size=300)
    lhs = apply_fir(_series(a * x + b * y), taps).samples
    rhs = a * apply_fir(_series(x), taps).samples + b * apply_fir(_series(y), taps).samples
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_apply_fir_deterministic():
    rng = np.random.default_rng(3)
    x = rng.normal(size=500)
    taps = design_fir(FilterSpec(FilterKind.BAND_PASS, 1.0, 5.0, order=101), FS)
    a = apply_fir(_series(x), taps).samples
    b = apply_fir(_series(x.copy()), taps).samples
    assert np.array_equal(a, b)


# ---------------------------------------------------------------- decimate

def test_decimate_rate_and_length():
    out = decimate(_series(np.random.default_rng(0).normal(size=10000), fs=1000.0), 20)
    assert out.sample_rate_hz == 50.0
    assert len(out) == 500


def test_decimate_preserves_dc():
    out = decimate(_series(np.full(10000, 2.5), fs=1000.0), 20)
    trans = edge_transient_len(ORDER) // 20 + 1
    assert np.allclose(out.samples[trans:-trans], 2.5, atol=1e-6)


def test_decimate_suppresses_out_of_band_sine():
    t = np.arange(40000) / 1000.0
    out = decimate(_series(np.sin(2 * np.pi * 30.0 * t), fs=1000.0), 20)
    steady = out.samples[100:-100]
    # 30 Hz is past the 20 Hz anti-alias cutoff: <= -50 dB of unit amplitude
    assert np.abs(steady).max() <= 10 ** (-50 / 20.0)


def test_decimate_factor_one_is_identity():
    s = _series(np.arange(100.0), fs=1000.0)
    assert decimate(s, 1) is s


def test_decimate_bad_factor():
    with pytest.raises(InvalidArgumentError):
        decimate(_series(np.ones(10)), 0)


# ------------------------------------------------------------------- bank

def test_bank_has_22_channels_in_table_order():
    bank = build_filter_bank(FS, order=ORDER)
    assert len(bank.channels) == 22
    first = bank.channels[0]
    assert first.kind is FilterKind.HIGH_PASS and first.cutoff_low_hz == 0.5
    for spec, lp in zip(bank.channels[1:11], ppg.TABLE1_LOWPASS_CUTOFFS_HZ[1:]):
        assert spec.kind is FilterKind.BAND_PASS
        assert (spec.cutoff_low_hz, spec.cutoff_high_hz) == (0.5, lp)
    for spec, hp in zip(bank.channels[11:], ppg.TABLE2_HIGHPASS_CUTOFFS_HZ):
        assert spec.kind is FilterKind.BAND_PASS
        assert (spec.cutoff_low_hz, spec.cutoff_high_hz) == (hp, 7.0)


def test_bank_deterministic_bit_identical():
    a = bank_taps(build_filter_bank(FS, order=101), FS)
    b = bank_taps(build_filter_bank(FS, order=101), FS)
    for ta, tb in zip(a, b):
        assert np.array_equal(ta, tb)


def test_bank_output_shape_and_alignment():
    x = np.random.default_rng(1).normal(size=400)
    matrix = apply_filter_bank(_series(x), build_filter_bank(FS, order=101))
    assert matrix.shape == (22, 400)


def test_bank_rejects_constant_input():
    matrix = apply_filter_bank(_series(np.ones(3000)), build_filter_bank(FS, order=101))
    steady = matrix[:, 400:-400]
    assert np.abs(steady).max() < 1e-6  # every channel has a high-pass stage


def test_bank_channel_passband_and_stopband_on_sines():
    bank = build_filter_bank(FS, order=ORDER)
    t = np.arange(5000) / FS
    x = np.sin(2 * np.pi * 1.0 * t)
    taps_ch2 = channel_taps(bank.channels[1], FS)   # band 0.5-1.4
    taps_ch22 = channel_taps(bank.channels[21], FS)  # band 6.4-7.0
    passed = apply_fir(_series(x), taps_ch2).samples[1500:-1500]
    blocked = apply_fir(_series(x), taps_ch22).samples[1500:-1500]
    assert np.abs(passed).max() >= 10 ** (-3 / 20.0)
    assert np.abs(blocked).max() <= 10 ** (-50 / 20.0)


def test_bank_rate_below_minimum_rejected():
    with pytest.raises(InvalidSpecError):
        build_filter_bank(10.0)


def test_channel_taps_length_reflects_cascade():
    bank = build_filter_bank(FS, order=ORDER)
    assert channel_taps(bank.channels[0], FS).shape == (2 * ORDER - 1,)   # hp twice
    assert channel_taps(bank.channels[1], FS).shape == (3 * ORDER - 2,)   # hp^2 * lp


# -------------------------------------------------------------- derivative

def test_derivative_of_ramp_is_constant():
    t = np.arange(100) / FS
    d1 = derivative(_series(3.0 * t))
    assert np.allclose(d1.samples, 3.0, atol=1e-9)
    d2 = derivative(_series(3.0 * t), n=2)
    assert np.allclose(d2.samples[1:-1], 0.0, atol=1e-6)


def test_derivative_matches_analytic_cosine():
    t = np.arange(200) / FS
    d1 = derivative(_series(np.sin(2 * np.pi * t)))
    expected = 2 * np.pi * np.cos(2 * np.pi * t)
    assert np.abs(d1.samples[1:-1] - expected[1:-1]).max() < 0.02


def test_second_derivative_consistent_with_twice_first():
    # both stencils approximate x'' to O(h^2); their difference is bounded by
    # ~(h^2/3)·max|x''''| ~= 0.23 for this signal at h = 0.02 s
    t = np.arange(300) / FS
    s = _series(np.sin(2 * np.pi * 0.7 * t) + 0.3 * np.cos(2 * np.pi * 1.3 * t))
    twice = derivative(derivative(s), n=1).samples[2:-2]
    direct = derivative(s, n=2).samples[2:-2]
    assert np.abs(twice - direct).max() < 0.25


def test_derivative_bad_order():
    with pytest.raises(InvalidArgumentError):
        derivative(_series(np.arange(10.0)), n=3)


# ----------------------------------------------------------------- extrema

def brute_force_extrema(x):
    """Strict-neighborhood oracle on signals without plateaus."""
    maxima = [i for i in range(1, len(x) - 1) if x[i] > x[i - 1] and x[i] > x[i + 1]]
    minima = [i for i in range(1, len(x) - 1) if x[i] < x[i - 1] and x[i] < x[i + 1]]
    return maxima, minima


def test_extrema_sine_positions():
    t = np.arange(100) / FS
    ext = detect_extrema(_series(np.sin(2 * np.pi * t)))
    assert len(ext.maxima_idx) == 2 and len(ext.minima_idx) == 2
    assert abs(ext.maxima_idx[0] - 12) <= 1 and abs(ext.maxima_idx[1] - 62) <= 1
    assert abs(ext.minima_idx[0] - 37) <= 1 and abs(ext.minima_idx[1] - 87) <= 1


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_extrema_match_brute_force_on_smooth_signals(seed):
    rng = np.random.default_rng(seed)
    t = np.arange(200) / FS
    x = sum(
        rng.uniform(0.5, 2.0) * np.sin(2 * np.pi * rng.uniform(0.3, 2.0) * t + rng.uniform(0, 7))
        for _ in range(3)
    )
    ext = detect_extrema(_series(x))
    maxima, minima = brute_force_extrema(x)
    assert ext.maxima_idx.tolist() == maxima
    assert ext.minima_idx.tolist() == minima


def test_extrema_monotone_and_constant_empty():
    for x in (np.arange(50.0), np.full(50, 3.0)):
        ext = detect_extrema(_series(x))
        assert ext.maxima_idx.size == 0 and ext.minima_idx.size == 0


def test_extrema_plateau_first_index():
    x = np.array([0.0, 1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 0.0])
    ext = detect_extrema(_series(x))
    assert ext.maxima_idx.tolist() == [1]
    assert ext.minima_idx.tolist() == [5]


def test_extrema_boundary_plateau_skipped():
    x = np.array([1.0, 1.0, 0.0, 2.0, 0.0])
    ext = detect_extrema(_series(x))
    assert ext.maxima_idx.tolist() == [3]


def test_extrema_alternate_when_merged():
    rng = np.random.default_rng(12)
    t = np.arange(300) / FS
    x = np.sin(2 * np.pi * 0.9 * t) + 0.2 * np.sin(2 * np.pi * 2.1 * t)
    ext = detect_extrema(_series(x))
    merged = sorted(
        [(i, "max") for i in ext.maxima_idx] + [(i, "min") for i in ext.minima_idx]
    )
    kinds = [k for _, k in merged]
    assert all(a != b for a, b in zip(kinds[:-1], kinds[1:]))


# ---------------------------------------------------------------- windows

def _bank_matrix(n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(22, n))


def test_segment_window_counts():
    assert len(segment_windows(_bank_matrix(1000), 250, 250, FS)) == 4
    assert len(segment_windows(_bank_matrix(1000), 1000, 1, FS)) == 1
    assert len(segment_windows(_bank_matrix(1000), 500, 250, FS)) == 3


def test_segment_windows_znormalized_rows():
    windows = segment_windows(_bank_matrix(600), 200, 200, FS)
    for w in windows:
        assert np.abs(w.channels.mean(axis=1)).max() < 1e-9
        assert np.abs(w.channels.var(axis=1) - 1.0).max() < 1e-6


def test_segment_windows_constant_row_becomes_zero():
    m = _bank_matrix(100)
    m[5] = 7.7
    w = segment_windows(m, 100, 100, FS)[0]
    assert np.array_equal(w.channels[5], np.zeros(100))


def test_segment_windows_timestamps_and_labels():
    windows = segment_windows(_bank_matrix(1000), 500, 250, FS, start_time_ms=100, label=1)
    assert [w.window_start_ms for w in windows] == [100, 5100, 10100]
    assert all(w.label == 1 for w in windows)


def test_segment_windows_too_long_rejected():
    with pytest.raises(InvalidArgumentError):
        segment_windows(_bank_matrix(100), 101, 10, FS)


def test_znormalize_rows_contract():
    rng = np.random.default_rng(4)
    m = rng.normal(size=(22, 64)) * 10 + 3
    z = znormalize_rows(m.copy())
    assert np.abs(z.mean(axis=1)).max() < 1e-12
    assert np.allclose(z.std(axis=1), 1.0, atol=1e-12)
