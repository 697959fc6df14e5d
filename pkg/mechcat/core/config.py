"""
This module handles process-level configuration.

It uses pydantic-settings to read environment variables (or a .env file)
that change where and how the tool runs, never what it computes. Physics
inputs live in the versioned run-config file (see mechcat.schemas.config).

Design Decisions (First Principles):
1. Environment only steers I/O and verbosity; numeric results never depend on it.
2. Reasonable defaults so the CLI works with no environment at all.
3. One cached instance per process.
"""

from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Environment settings, read from MECHCAT_* variables or a .env file.
    """

    # Default output directory; --out on the command line takes precedence
    OUTPUT_DIR: str = Field(default="runs", description="Default artifact directory")

    LOG_LEVEL: str = Field(default="INFO", description="Root logging level")

    model_config = SettingsConfigDict(
        env_file=".env", env_prefix="MECHCAT_", extra="ignore"
    )

    @field_validator("LOG_LEVEL")
    @classmethod
    def _upper(cls, value: str) -> str:
        return value.upper()


@lru_cache
def get_settings() -> Settings:
    """Return the process-wide Settings instance."""
    return Settings()
