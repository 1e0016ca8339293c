"""
Runtime settings.

Uses Pydantic Settings so every knob can come from a ``PERSFIT_*``
environment variable, validated and typed.
"""

import os
from functools import lru_cache
from typing import Literal

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Persfit settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_prefix="PERSFIT_",
        case_sensitive=False,
        extra="ignore",
    )

    # ==================== Parallelism ====================
    THREADS: int = Field(
        default_factory=lambda: os.cpu_count() or 1,
        ge=1,
        description="Worker cap for bench and synth",
    )

    # ==================== Logging ====================
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = Field(
        default="WARNING",
        description="Logging level for diagnostics on standard error",
    )

    # ==================== Solver defaults ====================
    DEFAULT_STRIDE: int = Field(
        default=1,
        ge=1,
        description="Subsampling stride of the active pixel grid",
    )

    @field_validator("LOG_LEVEL", mode="before")
    @classmethod
    def upper_log_level(cls, v: str) -> str:
        return v.upper() if isinstance(v, str) else v


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
