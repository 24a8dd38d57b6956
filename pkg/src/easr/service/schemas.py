"""Request/response models for the cleaning service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from .. import __version__


class SignalPayload(BaseModel):
    """A single channel on the wire: samples plus sampling rate."""

    samples: list[float] = Field(min_length=1)
    fs: float = Field(gt=0, description="Sampling frequency (Hz)")
    label: str = ""


class PreprocessOptions(BaseModel):
    bandpass_low: float = 0.5
    bandpass_high: float = 100.0
    notch_freq: float = 50.0
    notch_q: float = 30.0
    filter_order: int = 4
    normalize: bool = True


class EmbeddingOptions(BaseModel):
    m: int = Field(default=90, ge=1, description="Embedding dimension")
    lag: int = 1


class AsrOptions(BaseModel):
    cutoff_k: float = Field(default=17.0, gt=0)
    calib_window_s: float = Field(default=1.0, gt=0)
    process_window_s: float = Field(default=0.5, gt=0)
    z_min: float = -3.5
    z_max: float = 5.5
    reconstruct_rcond: float = 1e-4
    rejection_floor: float = 1e-9


class PipelineOptions(BaseModel):
    preprocess: PreprocessOptions = PreprocessOptions()
    embedding: EmbeddingOptions = EmbeddingOptions()
    asr: AsrOptions = AsrOptions()


class BlinkOptions(BaseModel):
    threshold_constant: float = Field(default=6.0, gt=0)
    min_peak_distance_ms: float = Field(default=250.0, gt=0)


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = __version__


class CleanRequest(BaseModel):
    signal: SignalPayload
    options: PipelineOptions = PipelineOptions()


class CleanResponse(BaseModel):
    cleaned: SignalPayload
    preprocessed: SignalPayload
    window_rejections: list[int]
    total_rejected: int
    elapsed_s: float
    options: PipelineOptions
    version: str = __version__


class MultichannelCleanRequest(BaseModel):
    channels: list[SignalPayload] = Field(min_length=2)
    asr: AsrOptions = AsrOptions()


class MultichannelCleanResponse(BaseModel):
    channels: list[SignalPayload]
    version: str = __version__


class SimulateRequest(BaseModel):
    fs: float = Field(default=500.0, gt=0)
    snr_db: float = 0.0
    seed: int = 42
    snr_range: tuple[float, float] = (-7.0, 2.0)
    clean_rms_uv: float = Field(default=10.0, gt=0)
    blink_amplitude_uv: float = Field(default=500.0, gt=0)
    arrangement: list[tuple[int, int]] | None = None


class SimulateResponse(BaseModel):
    contaminated: SignalPayload
    ground_truth: SignalPayload
    alpha: float
    blink_onsets: list[int]
    blink_supports: list[tuple[int, int]]
    blink_peaks: list[int]
    seed: int
    snr_db: float
    version: str = __version__


class EvaluateRequest(BaseModel):
    cleaned: SignalPayload
    contaminated: SignalPayload | None = None
    ground_truth: SignalPayload | None = None
    blink: BlinkOptions = BlinkOptions()
    elapsed_s: float = 0.0


class EvaluationReportPayload(BaseModel):
    rrmse_pct: float | None = None
    cc: float | None = None
    band_power: dict[str, float]
    blinks_before: int | None = None
    blinks_after: int
    reduction_pct: float | None = None
    elapsed_s: float = 0.0
    version: str = __version__


class BenchRequest(BaseModel):
    fs: float = Field(default=500.0, gt=0)
    snr_db: float = 0.0
    seed: int = 42
    snr_sweep: list[float] | None = None
    options: PipelineOptions = PipelineOptions()
    blink: BlinkOptions = BlinkOptions()
    include_timeseries: bool = True


class BenchRow(BaseModel):
    snr_db: float
    method: str
    rrmse_pct: float
    cc: float
    blinks_before: int
    blinks_after: int
    reduction_pct: float | None
    elapsed_s: float
    total_rejected: int | None = None
    alpha: float


class BandPowerTable(BaseModel):
    """Per-band power ratios for each stage of the default run."""

    contaminated: dict[str, float]
    easr_cleaned: dict[str, float]
    asr_cleaned: dict[str, float]
    ground_truth: dict[str, float]


class BenchTimeseries(BaseModel):
    fs: float
    contaminated: list[float]
    easr_cleaned: list[float]
    asr_cleaned: list[float]
    ground_truth: list[float]


class BenchResponse(BaseModel):
    rows: list[BenchRow]
    band_power: BandPowerTable
    reference: dict[str, dict[str, float]]
    timeseries: BenchTimeseries | None = None
    seed: int
    options: PipelineOptions
    version: str = __version__
