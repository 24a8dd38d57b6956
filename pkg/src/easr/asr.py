"""Two-phase artifact subspace reconstruction on a channels-by-samples matrix.

Calibration learns, from the input itself, a mixing matrix (symmetric
square root of the covariance of the artifact-free stretches) and
per-component amplitude thresholds; processing then eigendecomposes each
short window, drops components whose variance exceeds the learned bounds,
and re-synthesizes the window from the surviving subspace through the
mixing matrix.

Artifact-free stretches are located by windowed per-component RMS values:
a window is kept when every component's deviation score stays strictly
inside ``(z_min, z_max)``.  The scores use the median and the scaled
median absolute deviation rather than the sample mean and standard
deviation: with several artifact windows present, mean/std-based scores
are inflated by the artifacts themselves and can never exceed
``sqrt((n - m) / m)`` for m equal outliers among n windows, which silently
disables the selection.  The robust form keeps the same (z_min, z_max)
contract and reduces to ordinary z-scores on clean data.
"""

from __future__ import annotations

import base64
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, ConfigError, DimensionError, NumericError

logger = logging.getLogger(__name__)

STATE_FORMAT = "easr-asr-state"
STATE_VERSION = 1


@dataclass(frozen=True)
class AsrConfig:
    """Knobs for calibration and processing.

    ``cutoff_k`` scales the per-component rejection thresholds
    (threshold_i = mu_i + cutoff_k * sigma_i); smaller values reject more.
    ``reconstruct_rcond`` is the relative singular-value cutoff used when
    inverting the truncated mixing projection during reconstruction; the
    delay-embedded covariance of band-limited data is nearly singular, and
    inverting below this floor amplifies numerical noise into the output.
    ``rejection_floor`` exempts components whose window eigenvalue is a
    negligible fraction of the window's largest one: directions carrying no
    physical variance cannot meaningfully exceed an amplitude threshold.
    """

    cutoff_k: float = 17.0
    calib_window_s: float = 1.0
    process_window_s: float = 0.5
    z_min: float = -3.5
    z_max: float = 5.5
    reconstruct_rcond: float = 1e-4
    rejection_floor: float = 1e-9

    def validate(self):
        if not self.cutoff_k > 0:
            raise ConfigError(f"cutoff_k must be positive, got {self.cutoff_k}")
        if self.calib_window_s <= 0 or self.process_window_s <= 0:
            raise ConfigError("window lengths must be positive")
        if not self.z_min < self.z_max:
            raise ConfigError(
                f"z_min ({self.z_min}) must be below z_max ({self.z_max})"
            )
        if not 0 < self.reconstruct_rcond < 1:
            raise ConfigError("reconstruct_rcond must lie in (0, 1)")
        if not 0 <= self.rejection_floor < 1:
            raise ConfigError("rejection_floor must lie in [0, 1)")


@dataclass(frozen=True)
class AsrState:
    """Calibration output: mixing matrix, threshold matrix, and statistics."""

    mixing: np.ndarray              # M x M, symmetric PSD square root
    threshold: np.ndarray           # M x M, diag(T_i) @ eigvecs.T
    eigvecs: np.ndarray             # M x M, calibration eigenvectors (ascending)
    eigvals: np.ndarray             # M, calibration eigenvalues (ascending)
    mu: np.ndarray                  # M, mean clean-window RMS per component
    sigma: np.ndarray               # M, std of clean-window RMS per component
    component_thresholds: np.ndarray  # M, T_i = mu_i + k * sigma_i
    clean_windows: np.ndarray       # bool per calibration window
    fs: float
    calib_window_s: float

    @property
    def n_channels(self) -> int:
        return self.mixing.shape[0]


@dataclass
class RejectionReport:
    """Per-window rejection bookkeeping from one processing pass."""

    window_starts: list[int] = field(default_factory=list)
    window_lengths: list[int] = field(default_factory=list)
    counts: list[int] = field(default_factory=list)
    rejected_components: list[list[int]] = field(default_factory=list)

    @property
    def total_rejected(self) -> int:
        return int(sum(self.counts))

    @property
    def n_windows(self) -> int:
        return len(self.counts)


def matrix_sqrt_psd(C: np.ndarray, sym_tol: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root S with S @ S = C.

    Eigenvalues below ``1e-12 * max(eigenvalue)`` (including any negative
    ones from round-off) are clamped to zero.
    """
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {C.shape}")
    scale = max(1.0, float(np.abs(C).max()))
    if float(np.abs(C - C.T).max()) > sym_tol * scale:
        raise NumericError("matrix is not symmetric within tolerance")
    w, V = np.linalg.eigh((C + C.T) / 2.0)
    w = np.clip(w, 0.0, None)
    if w.max(initial=0.0) > 0:
        w[w < 1e-12 * w.max()] = 0.0
    S = (V * np.sqrt(w)) @ V.T
    return (S + S.T) / 2.0


def pinv(A: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudoinverse via SVD with a relative cutoff."""
    return np.linalg.pinv(np.asarray(A, dtype=np.float64), rcond=rcond)


def _fix_signs(V: np.ndarray) -> np.ndarray:
    """Make each eigenvector's largest-magnitude entry positive (bit-stable)."""
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _window_rms(Y: np.ndarray, wlen: int) -> np.ndarray:
    """Per-component RMS over consecutive full windows of ``wlen`` columns."""
    m, k = Y.shape
    nwin = k // wlen
    blocks = Y[:, :nwin * wlen].reshape(m, nwin, wlen)
    return np.sqrt(np.mean(blocks ** 2, axis=2))


def _robust_z(values: np.ndarray) -> np.ndarray:
    """Deviation scores per row: (x - median) / (1.4826 * MAD).

    The scale is floored at 10% of the row median: with few windows (or a
    very stable component) the MAD of a handful of RMS values collapses by
    chance and would flag ordinary fluctuations as extreme.  A row with
    zero spread and zero median scores 0 at the median and +/-inf
    elsewhere; a single column scores 0 everywhere.
    """
    if values.shape[1] == 1:
        return np.zeros_like(values)
    med = np.median(values, axis=1, keepdims=True)
    mad = np.median(np.abs(values - med), axis=1, keepdims=True)
    scale = np.maximum(1.4826 * mad, 0.1 * np.abs(med))
    z = np.zeros_like(values)
    ok = (scale > 0).ravel()
    z[ok] = (values[ok] - med[ok]) / scale[ok]
    if not ok.all():
        deviation = values[~ok] - med[~ok]
        z[~ok] = np.where(deviation == 0, 0.0, np.inf * np.sign(deviation))
    return z


def _as_2d(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"expected a channels-by-samples matrix, got {X.shape}")
    return X


def calibrate(X, fs: float, config: AsrConfig = AsrConfig()) -> AsrState:
    """Learn mixing matrix and rejection thresholds from a data matrix.

    Parameters
    ----------
    X : ndarray, shape (M, K)
        Channels (or delay rows) by samples.  Must span at least one full
        calibration window; a trailing partial window is left out of the
        statistics.
    fs : float
        Sampling rate of the columns, in Hz.

    Raises
    ------
    CalibrationError
        When no window qualifies as artifact-free, or the input is shorter
        than one calibration window.
    """
    config.validate()
    X = _as_2d(X)
    m, k = X.shape
    wlen = int(round(config.calib_window_s * fs))
    if wlen < 2:
        raise ConfigError(
            f"calibration window of {config.calib_window_s}s holds fewer than "
            f"2 samples at fs={fs}"
        )
    nwin = k // wlen
    if nwin < 1:
        raise CalibrationError(
            f"input spans {k} samples but one calibration window needs {wlen}; "
            "provide a longer recording"
        )

    # selection pass: component RMS scores in the basis of the full input
    C0 = np.atleast_2d(np.cov(X))
    _, V0 = np.linalg.eigh(C0)
    V0 = _fix_signs(V0)
    rms0 = _window_rms(V0.T @ X, wlen)
    z = _robust_z(rms0)
    clean = np.all((z > config.z_min) & (z < config.z_max), axis=0)
    if not clean.any():
        raise CalibrationError(
            "no artifact-free calibration windows found; provide a longer or "
            "cleaner recording"
        )

    keep_cols = np.concatenate(
        [np.arange(i * wlen, (i + 1) * wlen) for i in np.flatnonzero(clean)]
    )
    X_calib = X[:, keep_cols]

    C = np.atleast_2d(np.cov(X_calib))
    mixing = matrix_sqrt_psd(C)
    eigvals, eigvecs = np.linalg.eigh(C)
    eigvecs = _fix_signs(eigvecs)

    rms = _window_rms(eigvecs.T @ X_calib, wlen)
    mu = rms.mean(axis=1)
    sigma = rms.std(axis=1)
    thresholds = mu + config.cutoff_k * sigma
    threshold_matrix = (thresholds[:, None] * eigvecs.T)

    return AsrState(
        mixing=mixing,
        threshold=threshold_matrix,
        eigvecs=eigvecs,
        eigvals=eigvals,
        mu=mu,
        sigma=sigma,
        component_thresholds=thresholds,
        clean_windows=clean,
        fs=float(fs),
        calib_window_s=config.calib_window_s,
    )


def process(X, state: AsrState, fs: float,
            config: AsrConfig = AsrConfig()) -> tuple[np.ndarray, RejectionReport]:
    """Clean a data matrix window by window using a calibrated state.

    The matrix is split into consecutive non-overlapping windows of
    ``process_window_s``; a final shorter remainder is processed on its own
    when it holds at least 2 samples and passed through otherwise.  Within
    each window, component j of the local eigenbasis is rejected when its
    eigenvalue exceeds the squared norm of the threshold matrix applied to
    its eigenvector; rejected windows are re-synthesized from the kept
    components through the mixing matrix.  Windows without rejections pass
    through bit-identically.

    Returns the cleaned matrix and a :class:`RejectionReport`.
    """
    config.validate()
    X = _as_2d(X)
    m, k = X.shape
    if m != state.n_channels:
        raise DimensionError(
            f"data has {m} rows but the calibration state expects "
            f"{state.n_channels}"
        )
    wlen = int(round(config.process_window_s * fs))
    if wlen < 2:
        raise ConfigError(
            f"processing window of {config.process_window_s}s holds fewer than "
            f"2 samples at fs={fs}"
        )

    mixing, T = state.mixing, state.threshold
    out = X.copy()
    report = RejectionReport()
    for start in range(0, k, wlen):
        stop = min(start + wlen, k)
        report.window_starts.append(start)
        report.window_lengths.append(stop - start)
        if stop - start < 2:
            report.counts.append(0)
            report.rejected_components.append([])
            continue
        Xw = X[:, start:stop]
        Cw = np.atleast_2d(np.cov(Xw))
        if not Cw.any():
            report.counts.append(0)
            report.rejected_components.append([])
            continue
        D, V = np.linalg.eigh(Cw)
        if D.max() <= 0:  # numerically variance-free window
            report.counts.append(0)
            report.rejected_components.append([])
            continue
        V = _fix_signs(V)
        limits = np.sum((T @ V) ** 2, axis=0)
        rejected = D > limits
        # directions with numerically negligible variance carry no artifact
        rejected &= D > config.rejection_floor * D.max()
        if rejected.any():
            B = V.T @ mixing
            B[rejected, :] = 0.0
            R = mixing @ pinv(B, rcond=config.reconstruct_rcond) @ V.T
            rebuilt = R @ Xw
            # soft check only: the remap through the mixing matrix is not an
            # orthogonal projection, so growth is possible in principle
            grown = np.linalg.norm(rebuilt) - np.linalg.norm(Xw)
            if grown > 1e-6:
                logger.debug(
                    "window at column %d grew by %.3g in Frobenius norm after "
                    "reconstruction", start, grown,
                )
            out[:, start:stop] = rebuilt
        report.counts.append(int(np.count_nonzero(rejected)))
        report.rejected_components.append(np.flatnonzero(rejected).tolist())
    return out, report


def _encode_matrix(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a, dtype=np.float64)
    return {
        "shape": list(a.shape),
        "data": base64.b64encode(a.astype("<f8").tobytes()).decode("ascii"),
    }


def _decode_matrix(doc: dict) -> np.ndarray:
    data = np.frombuffer(base64.b64decode(doc["data"]), dtype="<f8")
    return data.reshape(doc["shape"]).astype(np.float64)


def save_state(state: AsrState) -> bytes:
    """Serialize a calibration state (matrices as base64, little-endian f64)."""
    doc = {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "fs": state.fs,
        "calib_window_s": state.calib_window_s,
        "mixing": _encode_matrix(state.mixing),
        "threshold": _encode_matrix(state.threshold),
        "eigvecs": _encode_matrix(state.eigvecs),
        "eigvals": _encode_matrix(state.eigvals),
        "mu": _encode_matrix(state.mu),
        "sigma": _encode_matrix(state.sigma),
        "component_thresholds": _encode_matrix(state.component_thresholds),
        "clean_windows": state.clean_windows.astype(int).tolist(),
    }
    return json.dumps(doc, indent=1).encode("utf-8")


def load_state(data: bytes) -> AsrState:
    """Inverse of :func:`save_state`."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise NumericError(f"not a readable state document: {exc}") from None
    if doc.get("format") != STATE_FORMAT:
        raise NumericError(f"unexpected state format {doc.get('format')!r}")
    if doc.get("version") != STATE_VERSION:
        raise NumericError(f"unsupported state version {doc.get('version')!r}")
    return AsrState(
        mixing=_decode_matrix(doc["mixing"]),
        threshold=_decode_matrix(doc["threshold"]),
        eigvecs=_decode_matrix(doc["eigvecs"]),
        eigvals=_decode_matrix(doc["eigvals"]),
        mu=_decode_matrix(doc["mu"]),
        sigma=_decode_matrix(doc["sigma"]),
        component_thresholds=_decode_matrix(doc["component_thresholds"]),
        clean_windows=np.array(doc["clean_windows"], dtype=bool),
        fs=float(doc["fs"]),
        calib_window_s=float(doc["calib_window_s"]),
    )
