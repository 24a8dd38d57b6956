"""Semi-simulated contaminated recordings with known ground truth.

A 1-minute contaminated signal is assembled as ``z = s + alpha * m``: the
ground truth ``s`` concatenates two ~10 s clean segments in an A B A B A B
pattern, the artifact train ``m`` places one zero-padded blink template in
each slot, and ``alpha`` is solved from a target signal-to-noise ratio
``SNR = 10 * log10(RMS(s) / RMS(alpha * m))`` taken verbatim as a ratio of
RMS values.  Segments can be supplied from real recordings or synthesized.

The synthetic clean generator draws spectrally shaped noise: a pink-like
1/f power trend flattened below 4 Hz, an alpha bump at 10 Hz, band edges
just inside 0.5-100 Hz, plus a small broadband noise floor standing in for
amplifier noise (a strictly band-limited signal would make the
delay-embedded covariance numerically singular, which no real recording
exhibits).  The synthetic blink is a smooth positive raised-cosine-squared
pulse of 0.30-0.40 s with a faster rise than decay, peaking at exactly the
requested amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError, NumericError
from .signal_io import Signal

DEFAULT_ARRANGEMENT: tuple[tuple[int, int], ...] = (
    (0, 0), (1, 1), (0, 1), (1, 0), (0, 0), (1, 1),
)


def rms(values) -> float:
    """Root mean square, sqrt(mean(x^2))."""
    samples = values.samples if isinstance(values, Signal) else np.asarray(values, dtype=np.float64)
    if samples.size == 0:
        raise DimensionError("RMS of an empty sequence is undefined")
    return float(np.sqrt(np.mean(samples ** 2)))


def alpha_for_snr(s, m, snr_db: float) -> float:
    """Mixing coefficient alpha with 10*log10(RMS(s)/RMS(alpha*m)) = snr_db."""
    rms_m = rms(m)
    if rms_m == 0:
        raise NumericError("artifact segment has zero RMS; cannot scale it")
    return rms(s) / (rms_m * 10.0 ** (snr_db / 10.0))


def pad_blink(blink: Signal, target_s: float, position: int) -> Signal:
    """Zero-pad a blink segment into a ``target_s``-second slot.

    The blink's samples land unchanged at ``position`` (sample offset).
    """
    target = int(round(target_s * blink.fs))
    if len(blink) > target:
        raise DimensionError(
            f"blink of {len(blink)} samples does not fit in a "
            f"{target}-sample slot"
        )
    if position < 0 or position + len(blink) > target:
        raise ConfigError(
            f"position {position} places the {len(blink)}-sample blink outside "
            f"the {target}-sample slot"
        )
    out = np.zeros(target)
    out[position:position + len(blink)] = blink.samples
    return Signal(out, fs=blink.fs, label=blink.label)


def synth_clean_eeg(duration_s: float, fs: float, seed,
                    rms_uv: float = 10.0) -> Signal:
    """Synthetic resting-state EEG-like noise, zero mean, given RMS."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    if n < 2:
        raise ConfigError("duration too short to synthesize")
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    shape = np.zeros_like(freqs)
    nonzero = freqs > 0
    shape[nonzero] = 1.0 / np.sqrt(np.maximum(freqs[nonzero], 4.0))
    shape *= 1.0 + 1.5 * np.exp(-0.5 * ((freqs - 10.0) / 1.5) ** 2)
    shape *= np.clip((freqs - 0.7) / 0.5, 0.0, 1.0)
    shape *= np.clip((100.0 - freqs) / 5.0, 0.0, 1.0)
    x = np.fft.irfft(spectrum * shape, n)
    x /= np.sqrt(np.mean(x ** 2))
    x = x + 0.03 * rng.standard_normal(n)  # broadband sensor-noise floor
    x -= x.mean()
    x *= rms_uv / np.sqrt(np.mean(x ** 2))
    return Signal(x, fs=fs, label="synthetic")


def synth_blink(duration_s: float, fs: float, amplitude_uv: float = 500.0,
                seed=0) -> Signal:
    """A single smooth blink-like pulse centered in a quiet segment.

    The pulse spans 0.30-0.40 s (drawn per seed) with an asymmetric
    raised-cosine-squared profile and peaks at exactly ``amplitude_uv``.
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * fs))
    width_s = rng.uniform(0.30, 0.40)
    rise_frac = rng.uniform(0.35, 0.45)
    n_pulse = int(round(width_s * fs))
    if n_pulse > n:
        raise ConfigError(
            f"segment of {duration_s}s cannot hold a {width_s:.2f}s pulse"
        )
    n_rise = max(1, int(round(n_pulse * rise_frac)))
    n_fall = max(1, n_pulse - n_rise)
    up = 0.5 * (1.0 - np.cos(np.pi * np.arange(n_rise) / n_rise))
    down = 0.5 * (1.0 + np.cos(np.pi * np.arange(1, n_fall + 1) / n_fall))
    pulse = np.concatenate([up, [1.0], down]) ** 2
    pulse *= amplitude_uv / pulse.max()
    out = np.zeros(n)
    start = (n - pulse.size) // 2
    out[start:start + pulse.size] = pulse
    return Signal(out, fs=fs, label="blink")


@dataclass(frozen=True)
class SemiSimSpec:
    """Recipe for one semi-simulated dataset.

    Leave ``clean_segments``/``blink_segments`` as None to synthesize them
    deterministically from ``rng_seed``.  ``arrangement`` lists one
    (clean_index, blink_index) pair per 10 s slot.
    """

    fs: float = 500.0
    snr_db: float = 0.0
    rng_seed: int = 42
    clean_segments: tuple[Signal, Signal] | None = None
    blink_segments: tuple[Signal, Signal] | None = None
    arrangement: tuple[tuple[int, int], ...] = DEFAULT_ARRANGEMENT
    snr_range: tuple[float, float] = (-7.0, 2.0)
    slot_s: float = 10.0
    clean_rms_uv: float = 10.0
    blink_amplitude_uv: float = 500.0
    blink_segment_s: float = 2.0

    def validate(self):
        lo, hi = self.snr_range
        if not lo <= self.snr_db <= hi:
            raise ConfigError(
                f"snr_db {self.snr_db} outside the configured range [{lo}, {hi}] dB"
            )
        if self.fs <= 0:
            raise ConfigError(f"fs must be positive, got {self.fs}")
        if not self.arrangement:
            raise ConfigError("arrangement must name at least one slot")
        for pair in self.arrangement:
            if len(pair) != 2:
                raise ConfigError(f"arrangement entries are (clean, blink) pairs, got {pair}")
        if self.clean_segments is not None and len(self.clean_segments) != 2:
            raise ConfigError("exactly 2 clean segments are required")
        if self.blink_segments is not None and len(self.blink_segments) != 2:
            raise ConfigError("exactly 2 blink segments are required")


@dataclass(frozen=True)
class SemiSimResult:
    """Contaminated signal, its ground truth, and where the blinks went."""

    contaminated: Signal
    ground_truth: Signal
    alpha_used: float
    blink_onsets: list[int] = field(default_factory=list)
    blink_supports: list[tuple[int, int]] = field(default_factory=list)
    blink_peaks: list[int] = field(default_factory=list)


def _segments(spec: SemiSimSpec):
    if spec.clean_segments is not None and spec.blink_segments is not None:
        return list(spec.clean_segments), list(spec.blink_segments)
    root = np.random.SeedSequence(spec.rng_seed)
    children = root.spawn(5)
    clean = list(spec.clean_segments) if spec.clean_segments is not None else [
        synth_clean_eeg(spec.slot_s, spec.fs, children[i], rms_uv=spec.clean_rms_uv)
        for i in range(2)
    ]
    blink = list(spec.blink_segments) if spec.blink_segments is not None else [
        synth_blink(spec.blink_segment_s, spec.fs, spec.blink_amplitude_uv,
                    seed=children[2 + i])
        for i in range(2)
    ]
    return clean, blink


def build_semisim(spec: SemiSimSpec = SemiSimSpec()) -> SemiSimResult:
    """Assemble the contaminated signal, ground truth, and blink bookkeeping."""
    spec.validate()
    clean, blink = _segments(spec)

    for sig in clean + blink:
        if sig.fs != spec.fs:
            raise ConfigError(
                f"segment {sig.label!r} sampled at {sig.fs} Hz, expected {spec.fs}"
            )
    slot_len = len(clean[0])
    if any(len(c) != slot_len for c in clean):
        raise DimensionError("clean segments must share one length")

    placement_rng = np.random.default_rng(
        np.random.SeedSequence(spec.rng_seed).spawn(5)[4]
    )
    truth_parts, train_parts = [], []
    onsets, supports, peaks = [], [], []
    for slot, (clean_idx, blink_idx) in enumerate(spec.arrangement):
        try:
            clean_seg = clean[clean_idx]
            blink_seg = blink[blink_idx]
        except IndexError:
            raise ConfigError(
                f"arrangement slot {slot} references segment "
                f"({clean_idx}, {blink_idx}) but only 2 of each exist"
            ) from None
        truth_parts.append(clean_seg.samples)

        jitter = int(round(placement_rng.uniform(-1.0, 1.0) * spec.fs))
        position = (slot_len - len(blink_seg)) // 2 + jitter
        position = int(np.clip(position, 0, slot_len - len(blink_seg)))
        padded = pad_blink(blink_seg, slot_len / spec.fs, position)
        train_parts.append(padded.samples)

        nonzero = np.flatnonzero(padded.samples)
        if nonzero.size == 0:
            raise NumericError(f"blink segment {blink_idx} is entirely zero")
        base = slot * slot_len
        onsets.append(base + int(nonzero[0]))
        supports.append((base + int(nonzero[0]), base + int(nonzero[-1]) + 1))
        peaks.append(base + int(np.argmax(np.abs(padded.samples))))

    truth = np.concatenate(truth_parts)
    train = np.concatenate(train_parts)
    alpha = alpha_for_snr(truth, train, spec.snr_db)
    contaminated = truth + alpha * train

    label = clean[0].label or "semisim"
    return SemiSimResult(
        contaminated=Signal(contaminated, fs=spec.fs, label=label),
        ground_truth=Signal(truth, fs=spec.fs, label=label),
        alpha_used=alpha,
        blink_onsets=onsets,
        blink_supports=supports,
        blink_peaks=peaks,
    )
