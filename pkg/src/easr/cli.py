"""Batch command-line front end.

The CLI is a thin client of the HTTP service: it reads and writes files
locally, ships the samples to the cleaning endpoints, and renders the
responses.  By default the service runs in-process; ``--server`` points
the same commands at a remote instance.

Exit codes: 0 success, 1 usage or configuration, 2 input/format,
3 numeric failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
from pydantic import ValidationError

from . import __version__
from .config import load_config_file, merge_section
from .errors import (
    CalibrationError,
    ConfigError,
    DimensionError,
    EasrError,
    FormatError,
    NumericError,
    UnknownChannelError,
)
from .service import create_app
from .service import schemas
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
)

EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3

_ERROR_CLASS_EXIT = {"config": EXIT_USAGE, "format": EXIT_INPUT,
                     "numeric": EXIT_NUMERIC}


def _fail(code: int, message: str):
    click.echo(f"easr: {message}", err=True)
    sys.exit(code)


def _exit_code_for(exc: EasrError) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, (FormatError, UnknownChannelError)):
        return EXIT_INPUT
    if isinstance(exc, (DimensionError, CalibrationError, NumericError)):
        return EXIT_NUMERIC
    return EXIT_NUMERIC


class Client:
    """POST/GET against the in-process app or a remote server."""

    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # some starlette/httpx pairings warn at import; not actionable here
                warnings.filterwarnings(
                    "ignore", message="Using `httpx` with `starlette.testclient`"
                )
                from fastapi.testclient import TestClient

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        try:
            response = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            _fail(EXIT_INPUT, f"cannot reach service: {exc}")
        if response.status_code == 200:
            return response.json()
        body = {}
        try:
            body = response.json()
        except ValueError:
            pass
        detail = body.get("detail", response.text)
        code = _ERROR_CLASS_EXIT.get(body.get("error_class"), EXIT_USAGE)
        _fail(code, f"{detail}")


def _load_pipeline_options(file_cfg, params) -> schemas.PipelineOptions:
    """File values overridden by explicit flags, validated by the schema."""
    preprocess = merge_section(file_cfg, "preprocess", {
        "bandpass_low": params.get("bandpass_low"),
        "bandpass_high": params.get("bandpass_high"),
        "notch_freq": params.get("notch_freq"),
        "notch_q": params.get("notch_q"),
        "filter_order": params.get("filter_order"),
        "normalize": params.get("normalize"),
    })
    embedding = merge_section(file_cfg, "embedding", {"m": params.get("m")})
    asr = merge_section(file_cfg, "asr", {
        "cutoff_k": params.get("k"),
        "calib_window_s": params.get("calib_window"),
        "process_window_s": params.get("process_window"),
        "z_min": params.get("z_min"),
        "z_max": params.get("z_max"),
    })
    try:
        return schemas.PipelineOptions(preprocess=preprocess, embedding=embedding,
                                       asr=asr)
    except ValidationError as exc:
        _fail(EXIT_USAGE, f"invalid configuration: {exc.errors()[0]['msg']}")


def _load_blink_options(file_cfg, params) -> schemas.BlinkOptions:
    blink = merge_section(file_cfg, "blink", {
        "threshold_constant": params.get("blink_constant"),
        "min_peak_distance_ms": params.get("blink_min_distance_ms"),
    })
    try:
        return schemas.BlinkOptions(**blink)
    except ValidationError as exc:
        _fail(EXIT_USAGE, f"invalid blink configuration: {exc.errors()[0]['msg']}")


def _guess_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix == ".bdf":
        return "bdf"
    if suffix in (".csv", ".txt"):
        return "csv"
    if suffix in (".raw", ".f64", ".bin", ".dat"):
        return "raw64"
    if suffix == ".f32":
        return "raw32"
    raise ConfigError(
        f"cannot infer format from {path.name!r}; pass an explicit format flag"
    )


def _read_file(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        _fail(EXIT_INPUT, f"cannot read {path}: {exc}")


def _load_signal(path: Path, fmt: str | None, fs: float | None,
                 channel: str | None) -> Signal:
    fmt = fmt or _guess_format(path)
    data = _read_file(path)
    if fmt == "bdf":
        recording = read_bdf(data)
        if channel is None:
            if len(recording.channels) == 1:
                return recording.channels[0]
            raise ConfigError(
                "--channel is required for multichannel BDF input; available: "
                + ", ".join(recording.labels)
            )
        return select_channel(recording, channel)
    if fs is None:
        raise ConfigError(f"--fs is required for {fmt} input")
    if fmt == "csv":
        return read_csv(data.decode("utf-8"), fs=fs, label=channel or path.stem)
    if fmt in ("raw32", "raw64"):
        encoding = "float32" if fmt == "raw32" else "float64"
        return read_raw(data, fs=fs, encoding=encoding, label=channel or path.stem)
    raise ConfigError(f"unknown input format {fmt!r}")


def _single_channel_bdf(signal: Signal, template: BdfChannel | None) -> bytes:
    channel = template or BdfChannel(label=signal.label or "EEG")
    channel = BdfChannel(
        label=channel.label or (signal.label or "EEG"),
        physical_min=channel.physical_min,
        physical_max=channel.physical_max,
        digital_min=channel.digital_min,
        digital_max=channel.digital_max,
        samples_per_record=len(signal),
        transducer=channel.transducer,
        physical_dim=channel.physical_dim,
        prefiltering=channel.prefiltering,
    )
    header = BdfHeader(channels=[channel], n_records=1,
                       record_duration=len(signal) / signal.fs)
    return write_bdf(BdfRecording(header=header, channels=[signal]))


def _write_signal_file(path: Path, signal: Signal, fmt: str | None,
                       bdf_template: BdfChannel | None = None):
    fmt = fmt or _guess_format(path)
    if fmt == "csv":
        path.write_text(write_csv(signal), encoding="utf-8")
    elif fmt in ("raw32", "raw64"):
        encoding = "float32" if fmt == "raw32" else "float64"
        path.write_bytes(write_raw(signal, encoding))
    elif fmt == "bdf":
        path.write_bytes(_single_channel_bdf(signal, bdf_template))
    else:
        raise ConfigError(f"unknown output format {fmt!r}")


def _provenance(seed, options_model) -> list[str]:
    config_json = json.dumps(options_model.model_dump() if options_model else {},
                             sort_keys=True)
    return [
        f"# easr {__version__}",
        f"# seed: {seed if seed is not None else 'n/a'}",
        f"# config: {config_json}",
    ]


def _emit(text: str, out: str | None):
    if out in (None, "-"):
        click.echo(text)
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _fmt(value, digits=4) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


_FORMAT_CHOICE = click.Choice(["auto", "bdf", "csv", "raw32", "raw64"])


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="easr")
@click.option("--config", "config_path", type=click.Path(), default=None,
              envvar="EASR_CONFIG",
              help="Config file (INI); defaults to ./easr.ini when present.")
@click.option("--server", default=None, metavar="URL",
              help="Remote service base URL; default runs the service in-process.")
@click.pass_context
def cli(ctx, config_path, server):
    """Single-channel EEG artifact removal: clean, simulate, evaluate, bench."""
    ctx.ensure_object(dict)
    ctx.obj["file_cfg"] = load_config_file(config_path)
    ctx.obj["server"] = server


def _pipeline_flags(f):
    options = [
        click.option("--m", type=int, default=None,
                     help="Embedding dimension (default 90)."),
        click.option("--k", type=float, default=None,
                     help="Rejection cut-off parameter (default 17)."),
        click.option("--bandpass-low", type=float, default=None),
        click.option("--bandpass-high", type=float, default=None),
        click.option("--notch-freq", type=float, default=None),
        click.option("--notch-q", type=float, default=None),
        click.option("--filter-order", type=int, default=None),
        click.option("--normalize/--no-normalize", default=None),
        click.option("--calib-window", type=float, default=None,
                     help="Calibration window length (s)."),
        click.option("--process-window", type=float, default=None,
                     help="Processing window length (s)."),
        click.option("--z-min", type=float, default=None),
        click.option("--z-max", type=float, default=None),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def _blink_flags(f):
    f = click.option("--blink-constant", type=float, default=None,
                     help="Blink threshold multiplier (default 6).")(f)
    f = click.option("--blink-min-distance-ms", type=float, default=None,
                     help="Minimum blink spacing (default 250 ms).")(f)
    return f


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path())
@click.option("--input-format", type=_FORMAT_CHOICE, default="auto")
@click.option("--channel", default=None, help="Channel label for BDF input.")
@click.option("--fs", type=float, default=None,
              help="Sampling rate (Hz) for CSV/raw input.")
@click.option("--start", type=float, default=None, help="Slice start (s).")
@click.option("--end", type=float, default=None, help="Slice end (s).")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--out-format", type=_FORMAT_CHOICE, default="auto")
@click.option("--report-out", default=None,
              help="Write the rejection/timing report here instead of stdout.")
@_pipeline_flags
@click.pass_context
def clean(ctx, input_path, input_format, channel, fs, start, end, out_path,
          out_format, report_out, **params):
    """Clean one channel of a recording and write the result."""
    file_cfg = ctx.obj["file_cfg"]
    try:
        options = _load_pipeline_options(file_cfg, params)
        source = Path(input_path)
        signal = _load_signal(source, None if input_format == "auto" else input_format,
                              fs, channel)
        bdf_template = None
        if source.suffix.lower() == ".bdf" or input_format == "bdf":
            recording = read_bdf(_read_file(source))
            for ch in recording.header.channels:
                if ch.label == signal.label:
                    bdf_template = ch
                    break
        if (start is None) != (end is None):
            raise ConfigError("--start and --end must be given together")
        if start is not None:
            signal = slice_signal(signal, start, end)

        client = Client(ctx.obj["server"])
        body = client.post("/clean", {
            "signal": {"samples": list(map(float, signal.samples)),
                       "fs": signal.fs, "label": signal.label},
            "options": options.model_dump(),
        })
        cleaned = Signal(body["cleaned"]["samples"], fs=body["cleaned"]["fs"],
                         label=body["cleaned"]["label"])
        _write_signal_file(Path(out_path),
                           cleaned,
                           None if out_format == "auto" else out_format,
                           bdf_template)

        rejections = body["window_rejections"]
        lines = _provenance(None, options) + [
            f"input: {input_path} channel={signal.label or 'n/a'} "
            f"n={len(cleaned)} fs={cleaned.fs:g}",
            f"windows: {len(rejections)}",
            f"windows_with_rejections: {sum(1 for c in rejections if c)}",
            f"total_rejected: {body['total_rejected']}",
            f"elapsed_s: {body['elapsed_s']:.3f}",
            f"output: {out_path}",
        ]
        _emit("\n".join(lines), report_out)
    except EasrError as exc:
        _fail(_exit_code_for(exc), str(exc))


@cli.command()
@click.option("--outdir", type=click.Path(), default=".",
              help="Directory for contaminated/ground-truth/onset files.")
@click.option("--snr-db", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--fs", type=float, default=None)
@click.option("--clean-rms", type=float, default=None,
              help="RMS of the synthetic clean background (uV).")
@click.option("--blink-amplitude", type=float, default=None,
              help="Peak amplitude of the synthetic blink (uV).")
@click.pass_context
def simulate(ctx, outdir, snr_db, seed, fs, clean_rms, blink_amplitude):
    """Generate a contaminated signal with ground truth and blink onsets."""
    file_cfg = ctx.obj["file_cfg"]
    try:
        section = merge_section(file_cfg, "semisim", {
            "snr_db": snr_db, "seed": seed, "fs": fs,
            "clean_rms_uv": clean_rms, "blink_amplitude_uv": blink_amplitude,
        })
        try:
            request = schemas.SimulateRequest(**section)
        except ValidationError as exc:
            _fail(EXIT_USAGE, f"invalid simulate options: {exc.errors()[0]['msg']}")

        client = Client(ctx.obj["server"])
        body = client.post("/simulate", request.model_dump())

        directory = Path(outdir)
        directory.mkdir(parents=True, exist_ok=True)
        contaminated = Signal(body["contaminated"]["samples"], fs=body["contaminated"]["fs"])
        truth = Signal(body["ground_truth"]["samples"], fs=body["ground_truth"]["fs"])
        (directory / "contaminated.csv").write_text(write_csv(contaminated))
        (directory / "ground_truth.csv").write_text(write_csv(truth))

        onset_lines = _provenance(body["seed"], request) + [
            "onset,support_start,support_end,peak"
        ]
        for onset, (lo, hi), peak in zip(body["blink_onsets"],
                                         body["blink_supports"],
                                         body["blink_peaks"]):
            onset_lines.append(f"{onset},{lo},{hi},{peak}")
        (directory / "onsets.csv").write_text("\n".join(onset_lines) + "\n")

        click.echo(f"wrote {directory / 'contaminated.csv'}, "
                   f"{directory / 'ground_truth.csv'}, {directory / 'onsets.csv'} "
                   f"(alpha={body['alpha']:.6g}, snr_db={body['snr_db']:g}, "
                   f"seed={body['seed']})")
    except EasrError as exc:
        _fail(_exit_code_for(exc), str(exc))


def _render_report(report: dict, fmt: str, subject: str, channel: str,
                   seed, options_model) -> str:
    if fmt == "json":
        doc = dict(report)
        doc["subject"], doc["channel"] = subject, channel
        doc["version"] = __version__
        doc["seed"] = seed
        doc["config"] = options_model.model_dump() if options_model else {}
        return json.dumps(doc, indent=1, sort_keys=True)
    if fmt == "csv":
        header = ("Subject,Channel,RRMSE (%),CC,Blinks Before,Blinks After,"
                  "Reduction (%),Time (s)")
        row = ",".join([
            subject, channel,
            _fmt(report.get("rrmse_pct"), 2), _fmt(report.get("cc")),
            _fmt(report.get("blinks_before")), _fmt(report.get("blinks_after")),
            _fmt(report.get("reduction_pct"), 2), _fmt(report.get("elapsed_s"), 3),
        ])
        return "\n".join(_provenance(seed, options_model) + [header, row])
    lines = _provenance(seed, options_model) + [
        f"subject: {subject}",
        f"channel: {channel}",
        f"rrmse_pct: {_fmt(report.get('rrmse_pct'), 2)}",
        f"cc: {_fmt(report.get('cc'))}",
        f"blinks_before: {_fmt(report.get('blinks_before'))}",
        f"blinks_after: {_fmt(report.get('blinks_after'))}",
        f"reduction_pct: {_fmt(report.get('reduction_pct'), 2)}",
        f"elapsed_s: {_fmt(report.get('elapsed_s'), 3)}",
    ]
    for band, ratio in report.get("band_power", {}).items():
        lines.append(f"band_power.{band}: {ratio:.4f}")
    return "\n".join(lines)


@cli.command()
@click.option("--cleaned", "cleaned_path", required=True, type=click.Path())
@click.option("--contaminated", "contaminated_path", type=click.Path(), default=None)
@click.option("--ground-truth", "truth_path", type=click.Path(), default=None)
@click.option("--input-format", type=_FORMAT_CHOICE, default="auto")
@click.option("--channel", default=None, help="Channel label for BDF inputs.")
@click.option("--fs", type=float, default=None)
@click.option("--format", "fmt", type=click.Choice(["text", "csv", "json"]),
              default=None)
@click.option("--out", default=None, help="Report destination (default stdout).")
@click.option("--subject", default="-")
@click.option("--channel-name", default=None,
              help="Channel column in the report (defaults to the signal label).")
@_blink_flags
@click.pass_context
def evaluate(ctx, cleaned_path, contaminated_path, truth_path, input_format,
             channel, fs, fmt, out, subject, channel_name, **params):
    """Report metrics for a cleaned signal (RRMSE/CC need ground truth)."""
    file_cfg = ctx.obj["file_cfg"]
    try:
        fmt = fmt or file_cfg.get("run", {}).get("report", "text")
        blink = _load_blink_options(file_cfg, params)
        explicit = None if input_format == "auto" else input_format
        cleaned = _load_signal(Path(cleaned_path), explicit, fs, channel)
        payload = {
            "cleaned": {"samples": list(map(float, cleaned.samples)),
                        "fs": cleaned.fs, "label": cleaned.label},
            "blink": blink.model_dump(),
        }
        for key, path in (("contaminated", contaminated_path),
                          ("ground_truth", truth_path)):
            if path is not None:
                sig = _load_signal(Path(path), explicit, fs, channel)
                if len(sig) != len(cleaned):
                    raise DimensionError(
                        f"{key} has {len(sig)} samples but cleaned has {len(cleaned)}"
                    )
                payload[key] = {"samples": list(map(float, sig.samples)),
                                "fs": sig.fs, "label": sig.label}

        client = Client(ctx.obj["server"])
        body = client.post("/evaluate", payload)
        text = _render_report(body, fmt, subject,
                              channel_name or cleaned.label or "-", None, blink)
        _emit(text, out)
    except EasrError as exc:
        _fail(_exit_code_for(exc), str(exc))


def _parse_sweep(text: str) -> list[float]:
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        try:
            lo, hi = int(lo_text), int(hi_text)
        except ValueError:
            raise ConfigError(f"cannot parse SNR sweep {text!r}; use e.g. -7..2")
        if hi < lo:
            raise ConfigError(f"sweep range {text!r} is empty")
        return [float(v) for v in range(lo, hi + 1)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse SNR sweep {text!r}")


def _render_bench(body: dict, fmt: str) -> str:
    rows = body["rows"]
    options = body["options"]
    provenance = [
        f"# easr {__version__}",
        f"# seed: {body['seed']}",
        f"# config: {json.dumps(options, sort_keys=True)}",
    ]
    if fmt == "json":
        return json.dumps(body, indent=1, sort_keys=True)
    if fmt == "csv":
        lines = provenance + [
            "Method,SNR (dB),RRMSE (%),CC,Blinks Before,Blinks After,"
            "Reduction (%),Time (s)"
        ]
        for row in rows:
            lines.append(",".join([
                row["method"], _fmt(row["snr_db"], 1), _fmt(row["rrmse_pct"], 2),
                _fmt(row["cc"]), str(row["blinks_before"]), str(row["blinks_after"]),
                _fmt(row["reduction_pct"], 2), _fmt(row["elapsed_s"], 3),
            ]))
        reference = body["reference"]
        for method, values in reference.items():
            lines.append(f"{method} (reference),,{values['rrmse_pct']},{values['cc']},,,,")
        return "\n".join(lines)

    width = "  {:<6} {:>8} {:>10} {:>7} {:>8} {:>8} {:>11} {:>9}"
    lines = provenance + [
        width.format("method", "snr(dB)", "RRMSE(%)", "CC", "blinks", "after",
                     "reduction", "time(s)")
    ]
    for row in rows:
        lines.append(width.format(
            row["method"], _fmt(row["snr_db"], 1), _fmt(row["rrmse_pct"], 2),
            _fmt(row["cc"], 3), row["blinks_before"], row["blinks_after"],
            _fmt(row["reduction_pct"], 1), _fmt(row["elapsed_s"], 2),
        ))
    reference = body["reference"]
    lines.append("  reference (reported): "
                 + " ; ".join(f"{m} {v['rrmse_pct']}% / CC {v['cc']}"
                              for m, v in reference.items()))
    band = body["band_power"]
    lines.append("")
    lines.append("  {:<7} {:>13} {:>13} {:>12} {:>13}".format(
        "band", "contaminated", "easr-cleaned", "asr-cleaned", "ground-truth"))
    for name in band["contaminated"]:
        lines.append("  {:<7} {:>13.3f} {:>13.3f} {:>12.3f} {:>13.3f}".format(
            name, band["contaminated"][name], band["easr_cleaned"][name],
            band["asr_cleaned"][name], band["ground_truth"][name]))
    return "\n".join(lines)


@cli.command()
@click.option("--snr-db", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--fs", type=float, default=None)
@click.option("--sweep-snr", default=None, metavar="LO..HI",
              help="Run one row per SNR, e.g. -7..2 or -7,-3,0,2.")
@click.option("--outdir", type=click.Path(), default=".",
              help="Directory for the plot-ready time-series dump.")
@click.option("--no-dump", is_flag=True, default=False,
              help="Skip writing bench_timeseries.csv.")
@click.option("--format", "fmt", type=click.Choice(["text", "csv", "json"]),
              default=None)
@click.option("--out", default=None, help="Report destination (default stdout).")
@_pipeline_flags
@_blink_flags
@click.pass_context
def bench(ctx, snr_db, seed, fs, sweep_snr, outdir, no_dump, fmt, out, **params):
    """Self-contained comparison of embedded vs multichannel cleaning."""
    file_cfg = ctx.obj["file_cfg"]
    try:
        fmt = fmt or file_cfg.get("run", {}).get("report", "text")
        options = _load_pipeline_options(file_cfg, params)
        blink = _load_blink_options(file_cfg, params)
        section = merge_section(file_cfg, "semisim",
                                {"snr_db": snr_db, "seed": seed, "fs": fs})
        request = {
            "fs": float(section.get("fs", 500.0)),
            "snr_db": float(section.get("snr_db", 0.0)),
            "seed": int(section.get("seed", 42)),
            "options": options.model_dump(),
            "blink": blink.model_dump(),
            "include_timeseries": not no_dump,
        }
        if sweep_snr:
            request["snr_sweep"] = _parse_sweep(sweep_snr)

        client = Client(ctx.obj["server"])
        body = client.post("/bench", request)

        if not no_dump and body.get("timeseries"):
            directory = Path(outdir)
            directory.mkdir(parents=True, exist_ok=True)
            ts = body["timeseries"]
            n = len(ts["contaminated"])
            lines = ["time_s,contaminated,easr_cleaned,asr_cleaned,ground_truth"]
            for i in range(n):
                lines.append(
                    f"{i / ts['fs']:.6f},{ts['contaminated'][i]!r},"
                    f"{ts['easr_cleaned'][i]!r},{ts['asr_cleaned'][i]!r},"
                    f"{ts['ground_truth'][i]!r}"
                )
            (directory / "bench_timeseries.csv").write_text("\n".join(lines) + "\n")

        _emit(_render_bench(body, fmt), out)
    except EasrError as exc:
        _fail(_exit_code_for(exc), str(exc))


@cli.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the cleaning service over HTTP."""
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port)


def main():
    try:
        cli(standalone_mode=False)
        sys.exit(0)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(EXIT_USAGE)
    except click.UsageError as exc:
        click.echo(f"easr: {exc.format_message()}", err=True)
        sys.exit(EXIT_USAGE)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except EasrError as exc:
        click.echo(f"easr: {exc}", err=True)
        sys.exit(_exit_code_for(exc))


if __name__ == "__main__":
    main()
