"""Exception hierarchy shared across the package.

The classes map onto the batch CLI's exit codes: configuration problems
exit 1, input/format problems exit 2, numeric failures exit 3.
"""


class EasrError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EasrError):
    """A configuration value is invalid or inconsistent (exit code 1)."""


class FormatError(EasrError):
    """An input stream violates its file format (exit code 2)."""


class HeaderParseError(FormatError):
    """A header field could not be parsed; the message names the field."""

    def __init__(self, field: str, value: str):
        self.field = field
        self.value = value
        super().__init__(f"cannot parse header field {field!r}: {value!r}")


class TruncationError(FormatError):
    """A stream ended before the declared amount of data (exit code 2)."""

    def __init__(self, message: str, byte_offset: int):
        self.byte_offset = byte_offset
        super().__init__(f"{message} (stream ends at byte offset {byte_offset})")


class UnknownChannelError(EasrError):
    """A requested channel label does not exist; lists the available ones."""

    def __init__(self, label: str, available: list[str]):
        self.label = label
        self.available = list(available)
        super().__init__(
            f"channel {label!r} not found; available channels: "
            + ", ".join(self.available)
        )


class NumericError(EasrError):
    """A numeric precondition or computation failed (exit code 3)."""


class DimensionError(NumericError):
    """Array shapes are incompatible with the requested operation."""


class CalibrationError(NumericError):
    """Calibration could not derive usable statistics from the data."""
