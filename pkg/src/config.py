# src/config.py
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from dotenv import find_dotenv, load_dotenv

from src.errors import ConfigError

DATA_DIR_ENV = "SIG2D_DATA_DIR"
WORKERS_ENV = "SIG2D_WORKERS"
SEED_ENV = "SIG2D_SEED"
COLOR_ENV = "SIG2D_COLOR"

_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class Settings:
    """
    Process-wide defaults. Values come from the environment (optionally a .env
    file); command-line flags override them per invocation.
    """

    data_dir: Path = Path("data")
    workers: int = 1
    seed: int = 0
    color: bool = True


def _int_from_env(name: str, default: int, minimum: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from e
    if value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return value


def _bool_from_env(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    lowered = raw.strip().lower()
    if lowered in _TRUTHY:
        return True
    if lowered in _FALSY:
        return False
    raise ConfigError(f"{name} must be a boolean, got {raw!r}")


def load_settings(use_dotenv: bool = True) -> Settings:
    """
    Builds Settings from the environment.

    Args:
        use_dotenv: Load the nearest .env file at or above the working directory. Existing
            environment variables always win over .env entries.

    Returns:
        The resolved Settings.
    """
    if use_dotenv:
        load_dotenv(find_dotenv(usecwd=True), override=False)

    data_dir = Path(os.environ.get(DATA_DIR_ENV) or Settings.data_dir)
    return Settings(
        data_dir=data_dir,
        workers=_int_from_env(WORKERS_ENV, Settings.workers, minimum=1),
        seed=_int_from_env(SEED_ENV, Settings.seed, minimum=0),
        color=_bool_from_env(COLOR_ENV, sys.stdout.isatty()),
    )
