"""Pre-processing chain: zero-centered normalization, band-pass, notch.

Filtering is zero-phase: a Butterworth band-pass (second-order sections)
and a biquad notch are each applied forward and backward over
reflect-padded data, so symmetric transients keep their peak position.
Detrending is deliberately not part of the chain.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy import signal as sps

from .errors import ConfigError
from .signal_io import Signal


@dataclass(frozen=True)
class PreprocessConfig:
    """Band edges and filter settings for the pre-processing chain."""

    bandpass_low: float = 0.5
    bandpass_high: float = 100.0
    notch_freq: float = 50.0
    notch_q: float = 30.0
    filter_order: int = 4
    normalize: bool = True

    def validate(self, fs: float):
        nyquist = fs / 2.0
        if not (0 < self.bandpass_low < self.bandpass_high):
            raise ConfigError(
                f"need 0 < bandpass_low < bandpass_high, got "
                f"{self.bandpass_low}..{self.bandpass_high} Hz"
            )
        if self.bandpass_high >= nyquist:
            raise ConfigError(
                f"bandpass_high ({self.bandpass_high} Hz) must stay below the "
                f"Nyquist frequency ({nyquist} Hz)"
            )
        if not (0 < self.notch_freq < nyquist):
            raise ConfigError(
                f"notch_freq ({self.notch_freq} Hz) must lie below Nyquist "
                f"({nyquist} Hz)"
            )
        if self.notch_q <= 0:
            raise ConfigError(f"notch_q must be positive, got {self.notch_q}")
        if self.filter_order < 1:
            raise ConfigError(f"filter_order must be >= 1, got {self.filter_order}")


def zero_center(signal: Signal) -> Signal:
    """Subtract the mean so the output averages to zero. Idempotent."""
    samples = signal.samples
    return signal.with_samples(samples - samples.mean())


def bandpass(signal: Signal, config: PreprocessConfig = PreprocessConfig()) -> Signal:
    """Zero-phase Butterworth band-pass between the configured edges."""
    config.validate(signal.fs)
    sos = sps.butter(config.filter_order,
                     [config.bandpass_low, config.bandpass_high],
                     btype="bandpass", fs=signal.fs, output="sos")
    # reflect-pad 3x the effective filter length before the
    # forward-backward pass to suppress startup transients
    padlen = min(3 * (2 * sos.shape[0] + 1), len(signal) - 1)
    return signal.with_samples(sps.sosfiltfilt(sos, signal.samples, padlen=padlen))


def notch(signal: Signal, config: PreprocessConfig = PreprocessConfig()) -> Signal:
    """Zero-phase second-order IIR notch at the configured line frequency."""
    config.validate(signal.fs)
    b, a = sps.iirnotch(config.notch_freq, config.notch_q, fs=signal.fs)
    padlen = min(3 * max(len(a), len(b)), len(signal) - 1)
    return signal.with_samples(sps.filtfilt(b, a, signal.samples, padlen=padlen))


def preprocess(signal: Signal, config: PreprocessConfig = PreprocessConfig()) -> Signal:
    """Full chain: zero-center (when enabled), band-pass, then notch."""
    config.validate(signal.fs)
    out = zero_center(signal) if config.normalize else signal
    out = bandpass(out, config)
    return notch(out, config)
