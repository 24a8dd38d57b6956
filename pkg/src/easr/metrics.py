"""Evaluation metrics: RRMSE, correlation, band powers, blink counting.

Band powers come from a Welch estimate (2 s hann segments, 50% overlap);
a band's power is the sum of spectral-density bins whose center frequency
falls in ``[low, high)``, and each ratio divides by the total over
0.5-100 Hz, so the five ratios partition to ~1.  Blink counting applies a
rectified amplitude threshold of ``constant * mean(|x|)``; contiguous
supra-threshold runs collapse to their largest sample, and a greedy
left-to-right pass enforces the minimum peak spacing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import ConfigError, DimensionError, NumericError
from .signal_io import Signal

BANDS: dict[str, tuple[float, float]] = {
    "delta": (0.5, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 13.0),
    "beta": (13.0, 30.0),
    "gamma": (30.0, 100.0),
}

TOTAL_BAND = (0.5, 100.0)


@dataclass(frozen=True)
class BlinkConfig:
    """Amplitude-threshold blink detector settings."""

    threshold_constant: float = 6.0
    min_peak_distance_ms: float = 250.0

    def validate(self):
        if self.threshold_constant <= 0:
            raise ConfigError("threshold_constant must be positive")
        if self.min_peak_distance_ms <= 0:
            raise ConfigError("min_peak_distance_ms must be positive")


@dataclass(frozen=True)
class EvaluationReport:
    """Everything the evaluation computes; fields stay None when the
    required inputs (ground truth, pre-cleaning signal) were absent."""

    blinks_after: int
    band_power: dict[str, float]
    rrmse_pct: float | None = None
    cc: float | None = None
    blinks_before: int | None = None
    reduction_pct: float | None = None
    elapsed_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "rrmse_pct": self.rrmse_pct,
            "cc": self.cc,
            "band_power": dict(self.band_power),
            "blinks_before": self.blinks_before,
            "blinks_after": self.blinks_after,
            "reduction_pct": self.reduction_pct,
            "elapsed_s": self.elapsed_s,
        }


def _samples(values) -> np.ndarray:
    if isinstance(values, Signal):
        return values.samples
    return np.asarray(values, dtype=np.float64)


def rrmse(estimate, ground_truth) -> float:
    """Relative root-mean-square error, in percent of the reference RMS."""
    est, ref = _samples(estimate), _samples(ground_truth)
    if est.shape != ref.shape:
        raise DimensionError(
            f"estimate has {est.shape} samples, ground truth {ref.shape}"
        )
    ref_rms = np.sqrt(np.mean(ref ** 2))
    if ref_rms == 0:
        raise NumericError("ground truth has zero RMS; RRMSE is undefined")
    return float(100.0 * np.sqrt(np.mean((est - ref) ** 2)) / ref_rms)


def correlation(a, b) -> float:
    """Pearson correlation coefficient of two equal-length signals."""
    x, y = _samples(a), _samples(b)
    if x.shape != y.shape:
        raise DimensionError(f"lengths differ: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise DimensionError("correlation needs at least 2 samples")
    xd, yd = x - x.mean(), y - y.mean()
    denom = np.sqrt(np.sum(xd ** 2) * np.sum(yd ** 2))
    if denom == 0:
        raise NumericError("correlation undefined for a zero-variance signal")
    return float(np.dot(xd, yd) / denom)


def band_power_ratios(values, fs: float | None = None) -> dict[str, float]:
    """Fraction of 0.5-100 Hz power in each conventional EEG band.

    Needs at least 2 s of samples.  Below 200 Hz sampling the gamma band is
    truncated at the Nyquist frequency, with a warning.
    """
    if isinstance(values, Signal) and fs is None:
        fs = values.fs
    if fs is None:
        raise ConfigError("fs is required for band powers of a plain array")
    x = _samples(values)
    if x.size < int(2 * fs):
        raise DimensionError(
            f"band powers need at least 2 s of samples ({int(2 * fs)}), got {x.size}"
        )
    nyquist = fs / 2.0
    top = TOTAL_BAND[1]
    if nyquist < top:
        warnings.warn(
            f"Nyquist frequency {nyquist} Hz truncates the gamma band below "
            f"{top} Hz",
            stacklevel=2,
        )
        top = nyquist

    freqs, psd = sps.welch(x, fs=fs, window="hann", nperseg=int(2 * fs),
                           noverlap=int(fs))
    total_mask = (freqs >= TOTAL_BAND[0]) & (freqs < top)
    total = float(psd[total_mask].sum())
    if total <= 0:
        raise NumericError("no spectral power inside 0.5-100 Hz")
    out = {}
    for name, (low, high) in BANDS.items():
        mask = (freqs >= low) & (freqs < min(high, top))
        out[name] = float(psd[mask].sum()) / total
    return out


def count_blinks(values, config: BlinkConfig = BlinkConfig(),
                 fs: float | None = None) -> tuple[int, list[int]]:
    """Count rectified-amplitude threshold crossings that look like blinks.

    Returns the count and the accepted peak sample indices.  The threshold
    is ``threshold_constant * mean(|x|)`` with a strict comparison, so an
    all-zero signal yields zero blinks.
    """
    config.validate()
    if isinstance(values, Signal) and fs is None:
        fs = values.fs
    if fs is None:
        raise ConfigError("fs is required to apply the minimum peak distance")
    x = _samples(values)
    if x.size == 0:
        raise DimensionError("cannot count blinks in an empty signal")

    magnitude = np.abs(x)
    threshold = config.threshold_constant * magnitude.mean()
    candidates = np.flatnonzero(magnitude > threshold)
    if candidates.size == 0:
        return 0, []

    run_edges = np.flatnonzero(np.diff(candidates) > 1) + 1
    runs = np.split(candidates, run_edges)
    run_peaks = [int(run[np.argmax(magnitude[run])]) for run in runs]

    min_distance = int(round(config.min_peak_distance_ms / 1000.0 * fs))
    accepted: list[int] = []
    for peak in run_peaks:
        if not accepted or peak - accepted[-1] >= min_distance:
            accepted.append(peak)
    return len(accepted), accepted


def percentage_reduction(before: int, after: int) -> float | None:
    """(before - after) / before * 100; None (n/a) when before is zero."""
    if before < 0 or after < 0:
        raise ConfigError("blink counts cannot be negative")
    if before == 0:
        return None
    return (before - after) / before * 100.0


def full_report(cleaned, fs: float | None = None, contaminated=None,
                ground_truth=None, blink_config: BlinkConfig = BlinkConfig(),
                elapsed_s: float = 0.0) -> EvaluationReport:
    """Compute every metric the available inputs allow.

    RRMSE and CC require ``ground_truth``; the before-count and reduction
    require ``contaminated``.  Band powers describe the cleaned signal.
    """
    if isinstance(cleaned, Signal) and fs is None:
        fs = cleaned.fs
    if fs is None:
        raise ConfigError("fs is required")

    blinks_after, _ = count_blinks(cleaned, blink_config, fs=fs)
    report = {
        "blinks_after": blinks_after,
        "band_power": band_power_ratios(cleaned, fs=fs),
        "elapsed_s": elapsed_s,
    }
    if ground_truth is not None:
        report["rrmse_pct"] = rrmse(cleaned, ground_truth)
        report["cc"] = correlation(cleaned, ground_truth)
    if contaminated is not None:
        blinks_before, _ = count_blinks(contaminated, blink_config, fs=fs)
        report["blinks_before"] = blinks_before
        report["reduction_pct"] = percentage_reduction(blinks_before, blinks_after)
    return EvaluationReport(**report)
