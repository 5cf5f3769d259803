"""Application configuration using Pydantic Settings."""

from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# NOTE: Logfire configured in main.py/conftest.py, not here (prevents test conflicts)


class Settings(BaseSettings):
    """Process-level settings loaded from LAB_* environment variables with validation."""

    model_config = SettingsConfigDict(
        env_prefix="LAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Application Settings
    environment: str = Field(default="development", description="Environment: development, ci, production")

    # Output
    output_root: Path = Field(
        default=Path("runs"),
        description="Default root directory for timestamped run directories"
    )

    # Logging
    log_level: str = Field(default="INFO", description="Console logging level")

    # Observability
    logfire_token: str = Field(default="", description="Logfire observability token (optional)")

    # Compute budgets
    default_word_cap: int = Field(
        default=1_000_000,
        description="Largest m^N for which words are enumerated exactly"
    )
    default_mc_samples: int = Field(
        default=100_000,
        description="Monte Carlo word count when exact enumeration is over budget"
    )
    default_threads: int = Field(default=1, description="Worker threads for block-parallel estimators")
    block_size: int = Field(
        default=4096,
        description="Samples per RNG stream block (fixed so results do not depend on thread count)"
    )
    max_product_dimension: int = Field(
        default=8,
        description="Largest k*d allowed for k-point product lifts"
    )
    max_galerkin_modes: int = Field(
        default=20_000,
        description="Largest number of Fourier modes in a Galerkin box"
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Normalize and validate the console log level."""
        level = v.strip().lower()
        if level not in {"trace", "debug", "info", "notice", "warn", "warning", "error", "fatal"}:
            raise ValueError(f"Unknown log level: {v}")
        return "warn" if level == "warning" else level

    @field_validator("default_word_cap", "default_mc_samples", "default_threads", "block_size")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        """Budgets must be positive."""
        if v < 1:
            raise ValueError("Budget values must be positive")
        return v


# Create a singleton instance
settings = Settings()
