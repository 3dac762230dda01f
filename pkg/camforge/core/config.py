"""
Configuration settings for camforge
"""
from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import field_validator


class Settings(BaseSettings):
    """Process-wide settings loaded from CAMFORGE_* environment variables"""

    PROJECT_NAME: str = "camforge"

    # Parallelism cap for sweeps (CAMFORGE_THREADS)
    THREADS: int = 1

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None

    # Classification loss
    LAMBDA: float = 0.2  # binomial profile
    MULTINOMIAL_LAMBDA: float = 0.6
    SAMPLES: int = 10

    # Feature similarity loss
    MU: float = 2.5
    SIGMA: float = 5.0
    FSL_WEIGHT: float = 1.0
    EXACT_PAIRS_MAX_PIXELS: int = 4096

    # Refinement
    STEP_SIZE: float = 0.01
    SWEEP_STEP_SIZE: float = 512.0  # about H·W / 2 for the 32x32 corpus
    ITERATIONS: int = 500

    # Pseudo-labels
    BG_THRESHOLD: float = 0.3

    # Synthetic corpus
    CORPUS_COUNT: int = 20
    CORPUS_SIZE: int = 32

    @field_validator("THREADS")
    @classmethod
    def check_threads(cls, v):
        if v < 1:
            raise ValueError("CAMFORGE_THREADS must be >= 1")
        return v

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="CAMFORGE_",
        case_sensitive=True,
        extra="ignore",
    )


# Global settings instance
settings = Settings()
