import numpy as np
import pytest

from easr.errors import ConfigError, DimensionError, NumericError
from easr.metrics import (
    BANDS,
    BlinkConfig,
    band_power_ratios,
    correlation,
    count_blinks,
    full_report,
    percentage_reduction,
    rrmse,
)
from easr.preprocess import preprocess
from easr.signal_io import Signal

FS = 500.0


def brute_force_blink_count(x, fs, constant=6.0, min_dist_ms=250.0):
    """Independent scan oracle: threshold, group contiguous runs, enforce
    spacing greedily."""
    x = np.asarray(x)
    threshold = constant * np.mean(np.abs(x))
    above = [i for i in range(x.size) if abs(x[i]) > threshold]
    peaks = []
    run = []
    for i in above:
        if run and i != run[-1] + 1:
            peaks.append(max(run, key=lambda j: abs(x[j])))
            run = []
        run.append(i)
    if run:
        peaks.append(max(run, key=lambda j: abs(x[j])))
    min_dist = round(min_dist_ms / 1000.0 * fs)
    kept = []
    for p in peaks:
        if not kept or p - kept[-1] >= min_dist:
            kept.append(p)
    return len(kept), kept


def pulse_train(positions_s, width_s=0.05, amplitude=1.0, duration_s=60.0,
                fs=FS, background=1e-4, seed=0):
    rng = np.random.default_rng(seed)
    x = background * rng.standard_normal(int(duration_s * fs))
    w = int(width_s * fs)
    for pos in positions_s:
        start = int(pos * fs)
        x[start:start + w] += amplitude * np.hanning(w)
    return Signal(x, fs=fs)


class TestRrmse:
    def test_zero_for_identical(self):
        x = np.random.default_rng(0).standard_normal(100)
        assert rrmse(x, x) == 0.0

    def test_double_is_hundred(self):
        x = np.random.default_rng(1).standard_normal(100)
        assert rrmse(2 * x, x) == pytest.approx(100.0, rel=1e-12)

    def test_matches_elementwise_oracle(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal(500), rng.standard_normal(500)
        num = np.sqrt(sum((ai - bi) ** 2 for ai, bi in zip(a, b)) / 500)
        den = np.sqrt(sum(bi ** 2 for bi in b) / 500)
        assert rrmse(a, b) == pytest.approx(100 * num / den, rel=1e-10)

    def test_additive_error_identity(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(400)
        e = rng.standard_normal(400) * 0.1
        expected = 100 * np.sqrt(np.mean(e ** 2)) / np.sqrt(np.mean(x ** 2))
        assert rrmse(x + e, x) == pytest.approx(expected, rel=1e-12)

    def test_zero_reference_rejected(self):
        with pytest.raises(NumericError):
            rrmse(np.ones(10), np.zeros(10))

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            rrmse(np.ones(5), np.ones(6))


class TestCorrelation:
    def test_self(self):
        x = np.random.default_rng(4).standard_normal(50)
        assert correlation(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_negated(self):
        x = np.random.default_rng(5).standard_normal(50)
        assert correlation(x, -x) == pytest.approx(-1.0, abs=1e-12)

    def test_affine_invariance(self):
        x = np.random.default_rng(6).standard_normal(50)
        assert correlation(x, 3.0 * x + 7.0) == pytest.approx(1.0, abs=1e-10)

    def test_symmetry(self):
        rng = np.random.default_rng(7)
        a, b = rng.standard_normal(80), rng.standard_normal(80)
        assert correlation(a, b) == pytest.approx(correlation(b, a), abs=1e-14)

    def test_zero_variance_rejected(self):
        with pytest.raises(NumericError):
            correlation(np.ones(10), np.arange(10.0))


class TestBandPower:
    def test_pure_alpha_tone(self):
        t = np.arange(int(10 * FS)) / FS
        ratios = band_power_ratios(Signal(np.sin(2 * np.pi * 10.0 * t), fs=FS))
        assert ratios["alpha"] >= 0.95

    def test_white_noise_proportional_to_bandwidth(self):
        rng = np.random.default_rng(8)
        ratios = band_power_ratios(Signal(rng.standard_normal(int(60 * FS)), fs=FS))
        total_bw = 99.5
        for name, (low, high) in BANDS.items():
            assert ratios[name] == pytest.approx((high - low) / total_bw, abs=0.03)

    def test_ratios_partition_to_one(self):
        rng = np.random.default_rng(9)
        sig = preprocess(Signal(rng.standard_normal(int(30 * FS)), fs=FS))
        ratios = band_power_ratios(sig)
        assert sum(ratios.values()) == pytest.approx(1.0, abs=0.02)

    def test_low_rate_truncates_gamma_with_warning(self):
        rng = np.random.default_rng(10)
        sig = Signal(rng.standard_normal(int(30 * 150)), fs=150.0)
        with pytest.warns(UserWarning, match="gamma"):
            ratios = band_power_ratios(sig)
        assert set(ratios) == set(BANDS)

    def test_too_short_rejected(self):
        with pytest.raises(DimensionError):
            band_power_ratios(Signal(np.ones(100), fs=FS))


class TestCountBlinks:
    def test_all_zeros(self):
        count, peaks = count_blinks(Signal(np.zeros(1000) + 0.0, fs=FS))
        assert count == 0 and peaks == []

    def test_six_pulses_ten_seconds_apart(self):
        sig = pulse_train([5, 15, 25, 35, 45, 55])
        count, peaks = count_blinks(sig)
        assert count == 6
        oracle_count, oracle_peaks = brute_force_blink_count(sig.samples, FS)
        assert count == oracle_count
        assert peaks == oracle_peaks

    def test_two_pulses_100ms_apart_merge(self):
        sig = pulse_train([10.0, 10.1])
        count, _ = count_blinks(sig)
        assert count == 1

    def test_two_pulses_300ms_apart_distinct(self):
        sig = pulse_train([10.0, 10.3])
        count, _ = count_blinks(sig)
        assert count == 2

    def test_scale_invariance(self):
        sig = pulse_train([3, 20, 40], seed=11)
        base, _ = count_blinks(sig)
        for c in [1e-6, 0.5, 7.0, 1e6]:
            scaled, _ = count_blinks(Signal(c * sig.samples, fs=FS))
            assert scaled == base

    def test_nothing_above_threshold(self):
        rng = np.random.default_rng(12)
        x = rng.uniform(-1.0, 1.0, 5000)  # mean|x| ~ 0.5, threshold ~ 3 > max
        count, _ = count_blinks(Signal(x, fs=FS))
        assert count == 0

    def test_matches_oracle_on_random_spiky_signal(self):
        rng = np.random.default_rng(13)
        x = rng.standard_normal(20000) * 0.1
        for pos in rng.integers(0, 19500, size=12):
            x[pos:pos + 30] += rng.uniform(5, 20) * np.hanning(30)
        count, peaks = count_blinks(Signal(x, fs=FS))
        oracle_count, oracle_peaks = brute_force_blink_count(x, FS)
        assert count == oracle_count and peaks == oracle_peaks

    def test_custom_config(self):
        sig = pulse_train([10.0, 10.1])
        count, _ = count_blinks(sig, BlinkConfig(min_peak_distance_ms=40.0))
        assert count == 2


class TestPercentageReduction:
    def test_full_removal(self):
        assert percentage_reduction(9, 0) == 100.0

    def test_no_change(self):
        assert percentage_reduction(4, 4) == 0.0

    def test_zero_before_is_na(self):
        assert percentage_reduction(0, 0) is None

    def test_negative_rejected(self):
        with pytest.raises(ConfigError):
            percentage_reduction(-1, 0)


class TestFullReport:
    def test_cleaned_equals_truth(self):
        sig = pulse_train([10, 30, 50], amplitude=0.0, background=1.0, seed=14)
        contaminated = pulse_train([10, 30, 50], amplitude=30.0, background=1.0,
                                   seed=14)
        report = full_report(sig, contaminated=contaminated, ground_truth=sig)
        assert report.rrmse_pct == 0.0
        assert report.cc == pytest.approx(1.0, abs=1e-12)
        assert report.blinks_before == 3
        assert report.blinks_after == 0
        assert report.reduction_pct == 100.0

    def test_without_ground_truth(self):
        sig = pulse_train([10], background=0.01, seed=15)
        report = full_report(sig)
        assert report.rrmse_pct is None and report.cc is None
        assert report.blinks_before is None and report.reduction_pct is None
        assert report.blinks_after >= 1
        assert set(report.band_power) == set(BANDS)

    def test_to_dict_roundtrip(self):
        sig = pulse_train([10], seed=16)
        doc = full_report(sig).to_dict()
        assert "band_power" in doc and "blinks_after" in doc
