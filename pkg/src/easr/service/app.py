"""FastAPI application wrapping the cleaning library.

All computation happens behind these endpoints; clients (including the
bundled CLI) only move signals and options across the wire.  Domain errors
surface as HTTP 400 with an ``error_class`` the client can map to exit
codes.
"""

from __future__ import annotations

import time

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..asr import AsrConfig
from ..embedding import EmbeddingConfig
from ..errors import (
    CalibrationError,
    ConfigError,
    DimensionError,
    EasrError,
    FormatError,
    NumericError,
    UnknownChannelError,
)
from ..metrics import BlinkConfig, band_power_ratios, correlation, count_blinks, \
    full_report, percentage_reduction, rrmse
from ..pipeline import EasrConfig, asr_clean_multichannel, easr_clean
from ..preprocess import PreprocessConfig, preprocess
from ..semisim import SemiSimSpec, build_semisim
from ..signal_io import Signal
from . import schemas

# Reference results reported for this method and for conventional
# multichannel reconstruction on the original semi-simulated recordings.
REFERENCE_RESULTS: dict[str, dict[str, float]] = {
    "easr": {"rrmse_pct": 43.87, "cc": 0.91},
    "asr": {"rrmse_pct": 56.82, "cc": 0.85},
}


def _error_class(exc: EasrError) -> str:
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, (FormatError, UnknownChannelError)):
        return "format"
    if isinstance(exc, (DimensionError, CalibrationError, NumericError)):
        return "numeric"
    return "error"


def _to_signal(payload: schemas.SignalPayload) -> Signal:
    return Signal(np.array(payload.samples), fs=payload.fs, label=payload.label)


def _to_payload(signal: Signal) -> schemas.SignalPayload:
    return schemas.SignalPayload(
        samples=[float(v) for v in signal.samples], fs=signal.fs, label=signal.label
    )


def _preprocess_config(options: schemas.PreprocessOptions) -> PreprocessConfig:
    return PreprocessConfig(**options.model_dump())


def _asr_config(options: schemas.AsrOptions) -> AsrConfig:
    return AsrConfig(**options.model_dump())


def _pipeline_config(options: schemas.PipelineOptions) -> EasrConfig:
    return EasrConfig(
        preprocess=_preprocess_config(options.preprocess),
        embedding=EmbeddingConfig(**options.embedding.model_dump()),
        asr=_asr_config(options.asr),
    )


def _blink_config(options: schemas.BlinkOptions) -> BlinkConfig:
    return BlinkConfig(**options.model_dump())


def _semisim_spec(req: schemas.SimulateRequest) -> SemiSimSpec:
    kwargs = dict(
        fs=req.fs,
        snr_db=req.snr_db,
        rng_seed=req.seed,
        snr_range=tuple(req.snr_range),
        clean_rms_uv=req.clean_rms_uv,
        blink_amplitude_uv=req.blink_amplitude_uv,
    )
    if req.arrangement is not None:
        kwargs["arrangement"] = tuple(tuple(pair) for pair in req.arrangement)
    return SemiSimSpec(**kwargs)


def run_bench(req: schemas.BenchRequest) -> schemas.BenchResponse:
    """Side-by-side comparison of embedded vs plain multichannel cleaning.

    For each SNR, two independently seeded semi-simulated channels form a
    two-channel dataset; the embedded pipeline cleans channel 1 alone while
    the baseline consumes both.  Metrics compare against the ground truth
    passed through the identical pre-processing chain.
    """
    config = _pipeline_config(req.options)
    blink_config = _blink_config(req.blink)
    snrs = req.snr_sweep if req.snr_sweep else [req.snr_db]

    rows: list[schemas.BenchRow] = []
    band_table = None
    timeseries = None
    for snr_db in snrs:
        spec1 = SemiSimSpec(fs=req.fs, snr_db=snr_db, rng_seed=req.seed,
                            snr_range=(min(snr_db, -7.0), max(snr_db, 2.0)))
        spec2 = SemiSimSpec(fs=req.fs, snr_db=snr_db, rng_seed=req.seed + 1,
                            snr_range=(min(snr_db, -7.0), max(snr_db, 2.0)))
        sim1, sim2 = build_semisim(spec1), build_semisim(spec2)

        truth_pre = preprocess(sim1.ground_truth, config.preprocess)
        contaminated_pre = preprocess(sim1.contaminated, config.preprocess)
        blinks_before, _ = count_blinks(contaminated_pre, blink_config)

        easr_result = easr_clean(sim1.contaminated, config)
        easr_after, _ = count_blinks(easr_result.cleaned, blink_config)
        rows.append(schemas.BenchRow(
            snr_db=snr_db,
            method="easr",
            rrmse_pct=rrmse(easr_result.cleaned, truth_pre),
            cc=correlation(easr_result.cleaned, truth_pre),
            blinks_before=blinks_before,
            blinks_after=easr_after,
            reduction_pct=percentage_reduction(blinks_before, easr_after),
            elapsed_s=easr_result.elapsed_s,
            total_rejected=easr_result.rejections.total_rejected,
            alpha=sim1.alpha_used,
        ))

        second_pre = preprocess(sim2.contaminated, config.preprocess)
        started = time.perf_counter()
        baseline = asr_clean_multichannel([contaminated_pre, second_pre], config.asr)
        baseline_elapsed = time.perf_counter() - started
        baseline_after, _ = count_blinks(baseline[0], blink_config)
        rows.append(schemas.BenchRow(
            snr_db=snr_db,
            method="asr",
            rrmse_pct=rrmse(baseline[0], truth_pre),
            cc=correlation(baseline[0], truth_pre),
            blinks_before=blinks_before,
            blinks_after=baseline_after,
            reduction_pct=percentage_reduction(blinks_before, baseline_after),
            elapsed_s=baseline_elapsed,
            total_rejected=None,
            alpha=sim1.alpha_used,
        ))

        if snr_db == snrs[0]:
            band_table = schemas.BandPowerTable(
                contaminated=band_power_ratios(contaminated_pre),
                easr_cleaned=band_power_ratios(easr_result.cleaned),
                asr_cleaned=band_power_ratios(baseline[0]),
                ground_truth=band_power_ratios(truth_pre),
            )
            if req.include_timeseries:
                timeseries = schemas.BenchTimeseries(
                    fs=req.fs,
                    contaminated=[float(v) for v in contaminated_pre.samples],
                    easr_cleaned=[float(v) for v in easr_result.cleaned.samples],
                    asr_cleaned=[float(v) for v in baseline[0].samples],
                    ground_truth=[float(v) for v in truth_pre.samples],
                )

    return schemas.BenchResponse(
        rows=rows,
        band_power=band_table,
        reference=REFERENCE_RESULTS,
        timeseries=timeseries,
        seed=req.seed,
        options=req.options,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="easr", version=__version__,
                  description="Single-channel EEG artifact removal service")

    @app.exception_handler(EasrError)
    async def handle_domain_error(request: Request, exc: EasrError):
        return JSONResponse(
            status_code=400,
            content={"detail": str(exc), "error_class": _error_class(exc)},
        )

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse()

    @app.post("/clean", response_model=schemas.CleanResponse)
    def clean(req: schemas.CleanRequest):
        result = easr_clean(_to_signal(req.signal), _pipeline_config(req.options))
        return schemas.CleanResponse(
            cleaned=_to_payload(result.cleaned),
            preprocessed=_to_payload(result.preprocessed),
            window_rejections=list(result.rejections.counts),
            total_rejected=result.rejections.total_rejected,
            elapsed_s=result.elapsed_s,
            options=req.options,
        )

    @app.post("/clean-multichannel", response_model=schemas.MultichannelCleanResponse)
    def clean_multichannel(req: schemas.MultichannelCleanRequest):
        cleaned = asr_clean_multichannel(
            [_to_signal(c) for c in req.channels], _asr_config(req.asr)
        )
        return schemas.MultichannelCleanResponse(
            channels=[_to_payload(c) for c in cleaned]
        )

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(req: schemas.SimulateRequest):
        result = build_semisim(_semisim_spec(req))
        return schemas.SimulateResponse(
            contaminated=_to_payload(result.contaminated),
            ground_truth=_to_payload(result.ground_truth),
            alpha=result.alpha_used,
            blink_onsets=result.blink_onsets,
            blink_supports=result.blink_supports,
            blink_peaks=result.blink_peaks,
            seed=req.seed,
            snr_db=req.snr_db,
        )

    @app.post("/evaluate", response_model=schemas.EvaluationReportPayload)
    def evaluate(req: schemas.EvaluateRequest):
        cleaned = _to_signal(req.cleaned)
        report = full_report(
            cleaned,
            contaminated=_to_signal(req.contaminated) if req.contaminated else None,
            ground_truth=_to_signal(req.ground_truth) if req.ground_truth else None,
            blink_config=_blink_config(req.blink),
            elapsed_s=req.elapsed_s,
        )
        return schemas.EvaluationReportPayload(**report.to_dict())

    @app.post("/bench", response_model=schemas.BenchResponse)
    def bench(req: schemas.BenchRequest):
        return run_bench(req)

    return app
