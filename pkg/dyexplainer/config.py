"""
DyExplainer - Configuration Settings

Process-level settings loaded from environment variables. Run-level
configuration (model, training, data) lives in `dyexplainer.schemas.config`.
"""

from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="DYX_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    PROJECT_NAME: str = "DyExplainer"
    ENV: Literal["development", "experiment", "production"] = "development"
    DEBUG: bool = False
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"

    # Outputs
    OUTPUT_DIR: str = "runs"

    # Parallelism; 1 guarantees bit-reproducible runs
    THREADS: int = Field(default=1, ge=1)


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
