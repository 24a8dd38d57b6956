"""Signal ingestion and emission: BDF (BioSemi 24-bit), CSV, and raw floats.

BDF layout, after the public BioSemi description: a 256-byte main header
(byte 0 is 0xFF, bytes 1-7 are ``BIOSEMI``, then fixed-width ASCII fields),
followed by ``n_channels`` * 256 bytes of channel headers stored
field-major (all labels, then all transducer fields, ...), followed by the
data records.  Each record holds, channel by channel, ``samples_per_record``
samples of 3-byte little-endian two's-complement integers.

Digital-to-physical scaling anchors ``digital_min`` at ``physical_min``
with a step of ``(physical_max - physical_min + 1) / (digital_max -
digital_min + 1)`` per digital unit.  For the standard BioSemi header
(digital range -8388608..8388607, physical range -262144..262143 uV) this
yields the device's nominal 1/32 uV per bit, mapping digital 0 to exactly
0 uV.

CSV files carry one channel: one decimal value per line ('.' separator,
UTF-8, LF or CRLF), with an optional single header line detected by a
non-numeric first token.  Raw streams are little-endian IEEE-754 floats.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DimensionError,
    FormatError,
    HeaderParseError,
    TruncationError,
    UnknownChannelError,
)

BDF_MAGIC = b"\xffBIOSEMI"

_MAIN_HEADER_BYTES = 256
_CHANNEL_HEADER_BYTES = 256
_SAMPLE_BYTES = 3


@dataclass(frozen=True)
class Signal:
    """A single-channel sampled time series in physical units (microvolts).

    Parameters
    ----------
    samples : array_like
        Real-valued amplitudes; stored as a read-only float64 array.
    fs : float
        Sampling frequency in Hz, strictly positive.
    label : str
        Channel name, e.g. ``"Fp1"``.
    """

    samples: np.ndarray
    fs: float
    label: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DimensionError(f"signal must be 1-D, got shape {samples.shape}")
        if samples.size < 1:
            raise DimensionError("signal must contain at least one sample")
        if not np.all(np.isfinite(samples)):
            raise FormatError("signal contains non-finite samples")
        if not (self.fs > 0):
            raise ConfigError(f"sampling frequency must be positive, got {self.fs}")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", float(self.fs))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.fs

    def with_samples(self, samples) -> "Signal":
        """Same fs/label, new sample values."""
        return Signal(samples, self.fs, self.label)


@dataclass
class BdfChannel:
    """Per-channel BDF header fields."""

    label: str
    physical_min: float = -262144.0
    physical_max: float = 262143.0
    digital_min: int = -8388608
    digital_max: int = 8388607
    samples_per_record: int = 500
    transducer: str = ""
    physical_dim: str = "uV"
    prefiltering: str = ""
    reserved: str = ""

    def validate(self):
        if not self.physical_max > self.physical_min:
            raise FormatError(
                f"channel {self.label!r}: physical_max ({self.physical_max}) must "
                f"exceed physical_min ({self.physical_min})"
            )
        if not self.digital_max > self.digital_min:
            raise FormatError(
                f"channel {self.label!r}: digital_max ({self.digital_max}) must "
                f"exceed digital_min ({self.digital_min})"
            )
        if self.samples_per_record < 1:
            raise FormatError(
                f"channel {self.label!r}: samples_per_record must be >= 1"
            )

    @property
    def gain(self) -> float:
        """Physical units per digital step (digital_min maps to physical_min)."""
        return (self.physical_max - self.physical_min + 1.0) / (
            self.digital_max - self.digital_min + 1.0
        )

    def digital_to_physical(self, digital: np.ndarray) -> np.ndarray:
        return self.physical_min + (np.asarray(digital, dtype=np.float64)
                                    - self.digital_min) * self.gain

    def physical_to_digital(self, physical: np.ndarray) -> np.ndarray:
        raw = np.rint((np.asarray(physical, dtype=np.float64) - self.physical_min)
                      / self.gain) + self.digital_min
        return raw.astype(np.int64)


@dataclass
class BdfHeader:
    """Main BDF header metadata plus the per-channel blocks."""

    channels: list[BdfChannel]
    n_records: int
    record_duration: float = 1.0
    subject_id: str = ""
    recording_id: str = ""
    start_date: str = "01.01.00"
    start_time: str = "00.00.00"
    version: str = "24BIT"

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def header_bytes(self) -> int:
        return _MAIN_HEADER_BYTES + self.n_channels * _CHANNEL_HEADER_BYTES

    @property
    def record_bytes(self) -> int:
        return _SAMPLE_BYTES * sum(c.samples_per_record for c in self.channels)

    def fs(self, index: int) -> float:
        return self.channels[index].samples_per_record / self.record_duration


@dataclass
class BdfRecording:
    """A parsed BDF file: header, physical signals, and raw digital samples."""

    header: BdfHeader
    channels: list[Signal]
    digitals: list[np.ndarray] = field(default_factory=list)

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.header.channels]


def _parse_int(text: bytes, name: str) -> int:
    stripped = text.decode("ascii", errors="replace").strip()
    try:
        return int(stripped)
    except ValueError:
        raise HeaderParseError(name, stripped) from None


def _parse_float(text: bytes, name: str) -> float:
    stripped = text.decode("ascii", errors="replace").strip()
    try:
        value = float(stripped)
    except ValueError:
        raise HeaderParseError(name, stripped) from None
    if not math.isfinite(value):
        raise HeaderParseError(name, stripped)
    return value


def _fmt_field(value, width: int, name: str) -> bytes:
    if isinstance(value, float) and value == int(value) and abs(value) < 1e15:
        text = str(int(value))
    else:
        text = str(value)
    data = text.encode("ascii", errors="strict")
    if len(data) > width:
        raise ConfigError(f"BDF header field {name} does not fit in {width} bytes: {text!r}")
    return data.ljust(width)


def _decode_samples(raw: bytes) -> np.ndarray:
    """3-byte little-endian two's-complement integers to int32."""
    b = np.frombuffer(raw, dtype=np.uint8).reshape(-1, 3).astype(np.int32)
    values = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
    values[values >= (1 << 23)] -= 1 << 24
    return values


def _encode_samples(values: np.ndarray) -> bytes:
    v = np.asarray(values, dtype=np.int64) & 0xFFFFFF
    out = np.empty((v.size, 3), dtype=np.uint8)
    out[:, 0] = v & 0xFF
    out[:, 1] = (v >> 8) & 0xFF
    out[:, 2] = (v >> 16) & 0xFF
    return out.tobytes()


def read_bdf(source) -> BdfRecording:
    """Parse a BDF byte stream into physical-unit signals.

    Parameters
    ----------
    source : bytes or binary file object
        Complete file contents, or an object with a ``read`` method.

    Raises
    ------
    FormatError
        Wrong magic bytes or malformed structure.
    HeaderParseError
        A numeric header field does not parse; the message names it.
    TruncationError
        The data area is shorter than the header declares; the message
        reports the byte offset where the stream ends.
    """
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = bytes(source)

    if len(data) < _MAIN_HEADER_BYTES:
        raise TruncationError("stream shorter than the 256-byte main header", len(data))
    if data[:8] != BDF_MAGIC:
        raise FormatError(
            f"bad magic bytes: expected 0xFF 'BIOSEMI', got {data[:8]!r}"
        )

    def take(offset, width):
        return data[offset:offset + width], offset + width

    pos = 8
    subject_id, pos = take(pos, 80)
    recording_id, pos = take(pos, 80)
    start_date, pos = take(pos, 8)
    start_time, pos = take(pos, 8)
    declared_header_bytes, pos = take(pos, 8)
    version, pos = take(pos, 44)
    n_records_raw, pos = take(pos, 8)
    record_duration_raw, pos = take(pos, 8)
    n_channels_raw, pos = take(pos, 4)

    n_channels = _parse_int(n_channels_raw, "n_channels")
    if n_channels < 1:
        raise FormatError(f"BDF must declare at least one channel, got {n_channels}")
    n_records = _parse_int(n_records_raw, "n_records")
    record_duration = _parse_float(record_duration_raw, "record_duration")
    if record_duration <= 0:
        raise HeaderParseError("record_duration", str(record_duration))
    _parse_int(declared_header_bytes, "header_bytes")

    header_total = _MAIN_HEADER_BYTES + n_channels * _CHANNEL_HEADER_BYTES
    if len(data) < header_total:
        raise TruncationError(
            f"stream shorter than the declared {header_total}-byte header", len(data)
        )

    def take_list(offset, width):
        fields = [data[offset + i * width: offset + (i + 1) * width]
                  for i in range(n_channels)]
        return fields, offset + n_channels * width

    labels, pos = take_list(pos, 16)
    transducers, pos = take_list(pos, 80)
    physical_dims, pos = take_list(pos, 8)
    physical_mins, pos = take_list(pos, 8)
    physical_maxs, pos = take_list(pos, 8)
    digital_mins, pos = take_list(pos, 8)
    digital_maxs, pos = take_list(pos, 8)
    prefilterings, pos = take_list(pos, 80)
    samples_per_record, pos = take_list(pos, 8)
    reserveds, pos = take_list(pos, 32)

    channels = []
    for i in range(n_channels):
        ch = BdfChannel(
            label=labels[i].decode("ascii", errors="replace").strip(),
            transducer=transducers[i].decode("ascii", errors="replace").strip(),
            physical_dim=physical_dims[i].decode("ascii", errors="replace").strip(),
            physical_min=_parse_float(physical_mins[i], f"physical_min[{i}]"),
            physical_max=_parse_float(physical_maxs[i], f"physical_max[{i}]"),
            digital_min=_parse_int(digital_mins[i], f"digital_min[{i}]"),
            digital_max=_parse_int(digital_maxs[i], f"digital_max[{i}]"),
            prefiltering=prefilterings[i].decode("ascii", errors="replace").strip(),
            samples_per_record=_parse_int(samples_per_record[i],
                                          f"samples_per_record[{i}]"),
            reserved=reserveds[i].decode("ascii", errors="replace").strip(),
        )
        ch.validate()
        channels.append(ch)

    record_bytes = _SAMPLE_BYTES * sum(c.samples_per_record for c in channels)
    available = len(data) - header_total
    if n_records < 0:
        # record count unknown; infer it from the stream length
        if available % record_bytes != 0:
            raise TruncationError(
                "data area is not a whole number of records", len(data)
            )
        n_records = available // record_bytes
    elif available < n_records * record_bytes:
        raise TruncationError(
            f"header declares {n_records} records "
            f"({n_records * record_bytes} data bytes) but only "
            f"{available} bytes follow the header",
            len(data),
        )

    header = BdfHeader(
        channels=channels,
        n_records=n_records,
        record_duration=record_duration,
        subject_id=subject_id.decode("ascii", errors="replace").strip(),
        recording_id=recording_id.decode("ascii", errors="replace").strip(),
        start_date=start_date.decode("ascii", errors="replace").strip(),
        start_time=start_time.decode("ascii", errors="replace").strip(),
        version=version.decode("ascii", errors="replace").strip(),
    )

    per_channel = [np.empty(n_records * c.samples_per_record, dtype=np.int32)
                   for c in channels]
    offset = header_total
    for r in range(n_records):
        for i, ch in enumerate(channels):
            width = ch.samples_per_record * _SAMPLE_BYTES
            chunk = data[offset:offset + width]
            values = _decode_samples(chunk)
            per_channel[i][r * ch.samples_per_record:(r + 1) * ch.samples_per_record] = values
            offset += width

    signals = []
    digitals = []
    for i, ch in enumerate(channels):
        values = per_channel[i]
        clipped = np.clip(values, ch.digital_min, ch.digital_max)
        n_railed = int(np.count_nonzero(clipped != values))
        if n_railed:
            warnings.warn(
                f"channel {ch.label!r}: {n_railed} digital samples outside "
                f"[{ch.digital_min}, {ch.digital_max}] were clamped",
                stacklevel=2,
            )
        digitals.append(clipped)
        signals.append(Signal(ch.digital_to_physical(clipped),
                              fs=header.fs(i), label=ch.label))
    return BdfRecording(header=header, channels=signals, digitals=digitals)


def write_bdf(recording: BdfRecording) -> bytes:
    """Serialize a recording back to BDF bytes.

    Uses the stored digital samples when present; otherwise quantizes the
    physical signals, clamping (with a warning) values outside the declared
    digital range.
    """
    header = recording.header
    n_channels = header.n_channels
    if len(recording.channels) != n_channels:
        raise DimensionError(
            f"header declares {n_channels} channels but recording holds "
            f"{len(recording.channels)}"
        )

    digitals = []
    for i, ch in enumerate(header.channels):
        ch.validate()
        expected = header.n_records * ch.samples_per_record
        if recording.digitals and i < len(recording.digitals) and recording.digitals[i] is not None:
            values = np.asarray(recording.digitals[i], dtype=np.int64)
        else:
            values = ch.physical_to_digital(recording.channels[i].samples)
        if values.size != expected:
            raise DimensionError(
                f"channel {ch.label!r}: {values.size} samples do not fill "
                f"{header.n_records} records of {ch.samples_per_record}"
            )
        clipped = np.clip(values, ch.digital_min, ch.digital_max)
        n_clamped = int(np.count_nonzero(clipped != values))
        if n_clamped:
            warnings.warn(
                f"channel {ch.label!r}: {n_clamped} samples outside the digital "
                f"range were clamped on write",
                stacklevel=2,
            )
        digitals.append(clipped)

    out = io.BytesIO()
    out.write(BDF_MAGIC)
    out.write(_fmt_field(header.subject_id, 80, "subject_id"))
    out.write(_fmt_field(header.recording_id, 80, "recording_id"))
    out.write(_fmt_field(header.start_date, 8, "start_date"))
    out.write(_fmt_field(header.start_time, 8, "start_time"))
    out.write(_fmt_field(header.header_bytes, 8, "header_bytes"))
    out.write(_fmt_field(header.version, 44, "version"))
    out.write(_fmt_field(header.n_records, 8, "n_records"))
    out.write(_fmt_field(header.record_duration, 8, "record_duration"))
    out.write(_fmt_field(n_channels, 4, "n_channels"))

    for width, name, values in [
        (16, "label", [c.label for c in header.channels]),
        (80, "transducer", [c.transducer for c in header.channels]),
        (8, "physical_dim", [c.physical_dim for c in header.channels]),
        (8, "physical_min", [c.physical_min for c in header.channels]),
        (8, "physical_max", [c.physical_max for c in header.channels]),
        (8, "digital_min", [c.digital_min for c in header.channels]),
        (8, "digital_max", [c.digital_max for c in header.channels]),
        (80, "prefiltering", [c.prefiltering for c in header.channels]),
        (8, "samples_per_record", [c.samples_per_record for c in header.channels]),
        (32, "reserved", [c.reserved for c in header.channels]),
    ]:
        for i, value in enumerate(values):
            out.write(_fmt_field(value, width, f"{name}[{i}]"))

    for r in range(header.n_records):
        for i, ch in enumerate(header.channels):
            spr = ch.samples_per_record
            out.write(_encode_samples(digitals[i][r * spr:(r + 1) * spr]))
    return out.getvalue()


def read_csv(source, fs: float, label: str = "") -> Signal:
    """Read a one-column CSV (one value per line) into a Signal.

    A single leading header line is skipped when its first token is not
    numeric.  Any other unparsable or non-finite line raises FormatError
    with its 1-based line number.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = source

    values = []
    lines = text.splitlines()
    start = 0
    if lines:
        first = lines[0].strip()
        if first:
            try:
                float(first.split(",")[0])
            except ValueError:
                start = 1  # header line
    for lineno, line in enumerate(lines[start:], start=start + 1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            value = float(stripped)
        except ValueError:
            raise FormatError(f"line {lineno}: cannot parse value {stripped!r}") from None
        if not math.isfinite(value):
            raise FormatError(f"line {lineno}: non-finite value {stripped!r}")
        values.append(value)
    if not values:
        raise FormatError("CSV stream contains no samples")
    return Signal(np.array(values), fs=fs, label=label)


def write_csv(signal: Signal) -> str:
    """One value per line, full float64 precision (round-trips exactly)."""
    return "\n".join(repr(float(v)) for v in signal.samples) + "\n"


_RAW_DTYPES = {"float32": "<f4", "float64": "<f8"}


def read_raw(data, fs: float, encoding: str = "float64",
             label: str = "") -> Signal:
    """Read little-endian IEEE-754 floats (``float32`` or ``float64``)."""
    if hasattr(data, "read"):
        data = data.read()
    if encoding not in _RAW_DTYPES:
        raise ConfigError(f"unsupported raw encoding {encoding!r}; "
                          "use 'float32' or 'float64'")
    dtype = np.dtype(_RAW_DTYPES[encoding])
    if len(data) % dtype.itemsize != 0:
        raise FormatError(
            f"raw stream length {len(data)} is not a multiple of the "
            f"{dtype.itemsize}-byte word size"
        )
    values = np.frombuffer(data, dtype=dtype).astype(np.float64)
    if values.size == 0:
        raise FormatError("raw stream contains no samples")
    if not np.all(np.isfinite(values)):
        raise FormatError("raw stream contains non-finite values")
    return Signal(values, fs=fs, label=label)


def write_raw(signal: Signal, encoding: str = "float64") -> bytes:
    if encoding not in _RAW_DTYPES:
        raise ConfigError(f"unsupported raw encoding {encoding!r}; "
                          "use 'float32' or 'float64'")
    return signal.samples.astype(_RAW_DTYPES[encoding]).tobytes()


def write_signal(signal: Signal, fmt: str):
    """Serialize a signal; ``csv`` returns text, raw formats return bytes."""
    if fmt == "csv":
        return write_csv(signal)
    if fmt in ("raw32", "float32"):
        return write_raw(signal, "float32")
    if fmt in ("raw64", "float64", "raw"):
        return write_raw(signal, "float64")
    raise ConfigError(f"unknown output format {fmt!r}")


def select_channel(recording: BdfRecording, label: str) -> Signal:
    """Return the channel with the given label, or list what exists."""
    for signal in recording.channels:
        if signal.label == label:
            return signal
    raise UnknownChannelError(label, recording.labels)


def slice_signal(signal: Signal, start_s: float, end_s: float) -> Signal:
    """Extract ``[start_s, end_s)`` seconds; bounds must lie inside the signal."""
    duration = signal.duration_s
    if end_s <= start_s:
        raise ConfigError(f"slice end ({end_s}s) must be after start ({start_s}s)")
    if start_s < 0 or end_s > duration + 1e-9:
        raise ConfigError(
            f"slice [{start_s}, {end_s})s outside the signal's 0..{duration:g}s"
        )
    lo = int(round(start_s * signal.fs))
    hi = min(int(round(end_s * signal.fs)), len(signal))
    if hi <= lo:
        raise ConfigError(f"slice [{start_s}, {end_s})s selects no samples")
    return signal.with_samples(signal.samples[lo:hi])
