"""Configuration management for spckd."""

from spckd.config.loader import dump_experiment_config, load_experiment_config
from spckd.config.logging import configure_logging
from spckd.config.settings import LoggingSettings, SpckdSettings, get_settings, reload_settings

__all__ = [
    "LoggingSettings",
    "SpckdSettings",
    "configure_logging",
    "dump_experiment_config",
    "get_settings",
    "load_experiment_config",
    "reload_settings",
]
