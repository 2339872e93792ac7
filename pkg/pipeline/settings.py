"""
Runtime settings read from the environment.

Values come from os.getenv after main.py has loaded a .env file.
GQME_DENSE_LIMIT is read by the configuration loader itself.
"""

import os
from dataclasses import dataclass

from spin_boson.config import ConfigError

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def _int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"Environment variable {name} must be an integer, got '{raw}'")
    if value < 1:
        raise ConfigError(f"Environment variable {name} must be positive, got {value}")
    return value


@dataclass(frozen=True)
class RuntimeSettings:
    """Process-wide defaults that command-line flags may override."""
    jobs: int = 1
    log_level: str = "INFO"

    @classmethod
    def from_env(cls) -> "RuntimeSettings":
        """Read GQME_JOBS and GQME_LOG_LEVEL."""
        level = (os.getenv("GQME_LOG_LEVEL") or "INFO").strip().upper()
        if level not in LOG_LEVELS:
            raise ConfigError(f"GQME_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got '{level}'")
        return cls(
            jobs=_int_from_env("GQME_JOBS", 1),
            log_level=level,
        )
