"""
Settings - Process-wide defaults

Everything else is passed explicitly; only the log level and the default
output directory can come from the environment.
"""

import os
from dataclasses import dataclass

LOG_LEVEL_ENV = "HYBRID_ORCH_LOG_LEVEL"
DATA_DIR_ENV = "HYBRID_ORCH_DATA_DIR"

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class Settings:
    log_level: str = "WARNING"
    data_dir: str = "data"


def load_settings() -> Settings:
    """Read overrides from the environment."""
    return Settings(
        log_level=os.getenv(LOG_LEVEL_ENV, "WARNING").upper(),
        data_dir=os.getenv(DATA_DIR_ENV, "data"),
    )
