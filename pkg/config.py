"""
Runtime settings loaded from the environment (and an optional .env file).
"""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

from errors import ConfigError

load_dotenv()

FORMATS = ("text", "json")


@dataclass(frozen=True)
class Settings:
    """Resolved CHARCOV_* settings."""
    gauss_cap: int = 100_000
    milgram_tol: float = 1e-9
    output_format: str = "text"
    log_level: str = "WARNING"
    factor_limit: int = 2**64


def _int_setting(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def _float_setting(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {raw!r}")
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value


def get_settings() -> Settings:
    """
    Read the current environment into a Settings object.

    Called on demand rather than cached so tests can patch os.environ.
    """
    output_format = os.getenv("CHARCOV_FORMAT", "text").strip().lower()
    if output_format not in FORMATS:
        raise ConfigError(f"CHARCOV_FORMAT must be one of {FORMATS}, got {output_format!r}")

    log_level = os.getenv("CHARCOV_LOG_LEVEL", "WARNING").strip().upper()
    if log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
        raise ConfigError(f"CHARCOV_LOG_LEVEL is not a logging level: {log_level!r}")

    return Settings(
        gauss_cap=_int_setting("CHARCOV_GAUSS_CAP", 100_000),
        milgram_tol=_float_setting("CHARCOV_MILGRAM_TOL", 1e-9),
        output_format=output_format,
        log_level=log_level,
        factor_limit=_int_setting("CHARCOV_FACTOR_LIMIT", 2**64),
    )
