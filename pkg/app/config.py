"""
Configuration settings for the DRC hotspot predictor.
"""

from functools import lru_cache
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field


class Settings(BaseSettings):
    """Process-wide settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="DRCNET_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Reproducibility
    default_seed: int = Field(
        default=0,
        description="Seed used when a command is run without --seed"
    )

    # Parallelism
    threads: int = Field(
        default=1,
        ge=1,
        description="Worker threads for voter/tree training and batch scoring"
    )

    # Logging
    log_level: str = Field(
        default="INFO",
        description="Root log level (DEBUG, INFO, WARNING, ERROR)"
    )
    log_format: str = Field(
        default="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        description="logging format string"
    )

    # Serialization
    model_format_version: int = Field(
        default=1,
        description="Version written into (and required from) model files"
    )

    # Tests
    run_slow: bool = Field(
        default=False,
        description="Enable the long synthetic-suite experiment tests"
    )


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
