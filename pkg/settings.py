"""
Settings Module
Reads rigscan configuration from the environment (optionally a .env file).
"""

import os
from dataclasses import dataclass, asdict
from typing import Dict, Mapping, Optional

from errors import ConfigError

ROUNDING_VARIABLE = "RIGSCAN_ROUNDING"
PRECISION_VARIABLE = "RIGSCAN_PRECISION"
BUDGET_VARIABLE = "RIGSCAN_ORACLE_BUDGET"
LOG_LEVEL_VARIABLE = "RIGSCAN_LOG_LEVEL"
WORKERS_VARIABLE = "RIGSCAN_WORKERS"

DEFAULT_ORACLE_BUDGET = 10**8


@dataclass(frozen=True)
class Settings:
    """Resolved configuration values."""

    rounding: str = "strong"
    precision: str = "binary64"
    oracle_budget: int = DEFAULT_ORACLE_BUDGET
    log_level: str = "WARNING"
    workers: int = 1

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "Settings":
        """
        Build settings from environment variables.

        Args:
            environ: Mapping to read instead of os.environ (tests)

        Returns:
            Settings instance

        Raises:
            ConfigError: If a variable holds an unusable value
        """
        env = os.environ if environ is None else environ

        rounding = env.get(ROUNDING_VARIABLE, "strong").strip().lower()
        if rounding not in ("strong", "fallback"):
            raise ConfigError(
                f"{ROUNDING_VARIABLE} must be 'strong' or 'fallback', got {rounding!r}"
            )

        precision = env.get(PRECISION_VARIABLE, "binary64").strip().lower()
        if precision not in ("binary64", "binary32"):
            raise ConfigError(
                f"{PRECISION_VARIABLE} must be 'binary64' or 'binary32', got {precision!r}"
            )

        budget = _read_int(env, BUDGET_VARIABLE, DEFAULT_ORACLE_BUDGET)
        workers = _read_int(env, WORKERS_VARIABLE, 1)

        log_level = env.get(LOG_LEVEL_VARIABLE, "WARNING").strip().upper()
        if log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigError(f"{LOG_LEVEL_VARIABLE} is not a log level: {log_level!r}")

        return cls(
            rounding=rounding,
            precision=precision,
            oracle_budget=budget,
            log_level=log_level,
            workers=workers,
        )

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def _read_int(env: Mapping[str, str], name: str, default: int) -> int:
    raw = env.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {raw!r}")
    if value < 1:
        raise ConfigError(f"{name} must be positive, got {value}")
    return value
