"""Embedded artifact subspace reconstruction for single-channel EEG.

Core library (this package), an HTTP service exposing it
(:mod:`easr.service`), and a batch CLI client (:mod:`easr.cli`).
"""

from .asr import (
    AsrConfig,
    AsrState,
    RejectionReport,
    calibrate,
    load_state,
    matrix_sqrt_psd,
    pinv,
    process,
    save_state,
)
from .embedding import (
    EmbeddedMatrix,
    EmbeddingConfig,
    diagonal_average,
    embed,
    suggest_dimension,
)
from .errors import (
    CalibrationError,
    ConfigError,
    DimensionError,
    EasrError,
    FormatError,
    HeaderParseError,
    NumericError,
    TruncationError,
    UnknownChannelError,
)
from .metrics import (
    BANDS,
    BlinkConfig,
    EvaluationReport,
    band_power_ratios,
    correlation,
    count_blinks,
    full_report,
    percentage_reduction,
    rrmse,
)
from .pipeline import CleanResult, EasrConfig, asr_clean_multichannel, easr_clean
from .preprocess import PreprocessConfig, bandpass, notch, preprocess, zero_center
from .semisim import (
    SemiSimResult,
    SemiSimSpec,
    alpha_for_snr,
    build_semisim,
    pad_blink,
    rms,
    synth_blink,
    synth_clean_eeg,
)
from .signal_io import (
    BdfChannel,
    BdfHeader,
    BdfRecording,
    Signal,
    read_bdf,
    read_csv,
    read_raw,
    select_channel,
    slice_signal,
    write_bdf,
    write_csv,
    write_raw,
    write_signal,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
