"""Delay embedding of a single channel and its anti-diagonal inverse.

``embed`` arranges a length-N signal into an M x K Hankel matrix whose
row i (0-based) is ``x[i : i + K]`` with ``K = N - M + 1``; every column
is one M-sample delay vector.  ``diagonal_average`` maps any M x K matrix
back to a length N series by averaging each anti-diagonal, which inverts
``embed`` exactly on true Hankel matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DimensionError
from .signal_io import Signal


@dataclass(frozen=True)
class EmbeddingConfig:
    """Embedding dimension and lag. Only lag 1 is supported.

    ``f_low_of_interest`` feeds :func:`suggest_dimension`; the suggestion
    is advisory, ``m`` is what gets used.
    """

    m: int = 90
    lag: int = 1
    f_low_of_interest: float | None = None

    def validate(self):
        if self.m < 1:
            raise ConfigError(f"embedding dimension must be >= 1, got {self.m}")
        if self.lag != 1:
            raise ConfigError(f"only lag 1 is supported, got {self.lag}")

    def suggested_m(self, fs: float) -> int | None:
        """Lower bound on M for the configured frequency of interest."""
        if self.f_low_of_interest is None:
            return None
        return suggest_dimension(fs, self.f_low_of_interest)


@dataclass(frozen=True)
class EmbeddedMatrix:
    """M x K Hankel matrix of delay vectors, with the sampling rate attached."""

    data: np.ndarray
    fs: float
    lag: int = 1

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionError(f"embedded matrix must be 2-D, got {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def k_cols(self) -> int:
        return self.data.shape[1]

    @property
    def n_samples(self) -> int:
        return self.m + self.k_cols - 1


def suggest_dimension(fs: float, f_low: float) -> int:
    """Smallest embedding dimension M with M >= fs / f_low."""
    if f_low <= 0:
        raise ConfigError(f"lowest frequency of interest must be positive, got {f_low}")
    return max(1, math.ceil(fs / f_low))


def embed(signal: Signal, config: EmbeddingConfig = EmbeddingConfig()) -> EmbeddedMatrix:
    """Build the M x K delay-vector matrix of a signal."""
    config.validate()
    n = len(signal)
    m = config.m
    if n < m:
        raise DimensionError(
            f"embedding dimension {m} exceeds the signal length {n}"
        )
    k = n - m + 1
    data = sliding_window_view(signal.samples, k).copy()
    return EmbeddedMatrix(data=data, fs=signal.fs)


def diagonal_average(matrix, fs: float | None = None,
                     label: str = "") -> Signal:
    """Average each anti-diagonal of an M x K matrix into a 1-D signal.

    Accepts an :class:`EmbeddedMatrix` (its fs is used unless overridden)
    or a plain 2-D array with an explicit ``fs``.  Output sample ``s`` is
    the mean of all entries ``data[i, j]`` with ``i + j == s``.
    """
    if isinstance(matrix, EmbeddedMatrix):
        data = matrix.data
        if fs is None:
            fs = matrix.fs
    else:
        data = np.asarray(matrix, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionError(f"expected a 2-D matrix, got shape {data.shape}")
        if fs is None:
            raise ConfigError("fs is required when averaging a plain array")
    m, k = data.shape
    if m == 0 or k == 0:
        raise DimensionError("cannot average an empty matrix")
    length = m + k - 1
    idx = np.add.outer(np.arange(m), np.arange(k)).ravel()
    sums = np.bincount(idx, weights=data.ravel(), minlength=length)
    pos = np.arange(length)
    counts = np.minimum(np.minimum(pos + 1, length - pos), min(m, k))
    return Signal(sums / counts, fs=fs, label=label)
