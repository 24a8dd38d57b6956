"""Static configuration file for the CLI.

An INI document whose sections mirror the library configs::

    [preprocess]
    bandpass_low = 0.5
    ...
    [embedding]
    m = 90
    [asr]
    cutoff_k = 17
    [semisim]
    snr_db = 0
    seed = 42
    [blink]
    threshold_constant = 6
    [run]
    report = text

The default path is ``./easr.ini`` when it exists; the ``EASR_CONFIG``
environment variable overrides the default path; command-line flags
override file values.
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path

from .errors import ConfigError

ENV_VAR = "EASR_CONFIG"
DEFAULT_NAME = "easr.ini"

KNOWN_SECTIONS = ("preprocess", "embedding", "asr", "semisim", "blink", "run")


def default_config_path() -> Path | None:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    local = Path(DEFAULT_NAME)
    return local if local.exists() else None


def load_config_file(path: str | Path | None = None) -> dict[str, dict[str, str]]:
    """Parse the config file into ``{section: {key: raw string}}``.

    With no explicit path, falls back to :func:`default_config_path`; an
    absent default file yields an empty configuration, but an explicitly
    named or environment-provided file must exist.
    """
    if path is None:
        path = default_config_path()
        if path is None:
            return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from None
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in KNOWN_SECTIONS:
            raise ConfigError(
                f"unknown config section [{section}] in {path}; expected one of "
                + ", ".join(KNOWN_SECTIONS)
            )
        out[section] = dict(parser.items(section))
    return out


def merge_section(file_cfg: dict[str, dict[str, str]], section: str,
                  overrides: dict) -> dict:
    """File values for one section, replaced by any non-None overrides."""
    merged: dict = dict(file_cfg.get(section, {}))
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return merged
