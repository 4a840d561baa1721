"""Runtime settings for spckd using Pydantic Settings with XDG support."""

import os
from functools import lru_cache
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


def _xdg_dir(variable: str, fallback: Path) -> Path:
    value = os.environ.get(variable)
    base = Path(value) if value else fallback
    return base / "spckd"


def get_config_dir() -> Path:
    """~/.config/spckd, or $XDG_CONFIG_HOME/spckd."""
    return _xdg_dir("XDG_CONFIG_HOME", Path.home() / ".config")


def get_data_dir() -> Path:
    """~/.local/share/spckd, or $XDG_DATA_HOME/spckd."""
    return _xdg_dir("XDG_DATA_HOME", Path.home() / ".local" / "share")


def get_cache_dir() -> Path:
    """~/.cache/spckd, or $XDG_CACHE_HOME/spckd."""
    return _xdg_dir("XDG_CACHE_HOME", Path.home() / ".cache")


class LoggingSettings(BaseSettings):
    """Logging configuration."""

    model_config = SettingsConfigDict(
        env_prefix="SPCKD_LOG_",
        extra="ignore",
    )

    level: str = Field(default="INFO", description="Log level")
    format: str = Field(default="json", description="Log format (json, console)")
    file: Path | None = Field(default=None, description="Log file path")

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        upper = v.upper()
        if upper not in valid_levels:
            raise ValueError(f"Invalid log level: {v}. Must be one of {valid_levels}")
        return upper

    @field_validator("format")
    @classmethod
    def validate_format(cls, v: str) -> str:
        """Validate log format."""
        valid_formats = {"json", "console"}
        lower = v.lower()
        if lower not in valid_formats:
            raise ValueError(f"Invalid log format: {v}. Must be one of {valid_formats}")
        return lower


class SpckdSettings(BaseSettings):
    """Process-wide settings.

    Loaded from (in order of precedence):
    1. Environment variables (SPCKD_* prefix)
    2. .env file in current directory
    3. Default values

    Experiment hyperparameters live in config files, not here.
    """

    model_config = SettingsConfigDict(
        env_prefix="SPCKD_",
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        extra="ignore",
    )

    threads: int = Field(default=1, ge=1, description="Worker cap for evaluation")
    run_slow: bool = Field(default=False, description="Enable desk-scale experiments in tests")

    config_dir: Path = Field(default_factory=get_config_dir, description="Configuration directory")
    data_dir: Path = Field(default_factory=get_data_dir, description="Data directory")
    cache_dir: Path = Field(default_factory=get_cache_dir, description="Cache directory")

    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    def ensure_directories(self) -> None:
        """Ensure all XDG directories exist."""
        for dir_path in [self.config_dir, self.data_dir, self.cache_dir]:
            dir_path.mkdir(parents=True, exist_ok=True)


@lru_cache
def get_settings() -> SpckdSettings:
    """Cached settings singleton."""
    return SpckdSettings()


def reload_settings() -> SpckdSettings:
    """Reload settings (clears cache).

    Useful for testing or when environment changes.
    """
    get_settings.cache_clear()
    return get_settings()
