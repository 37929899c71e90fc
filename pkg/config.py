"""
Configuration settings for the region bound toolkit
"""

import logging
from pathlib import Path
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# Load environment variables from .env.local in project root
project_root = Path(__file__).parent
env_local_path = project_root / ".env.local"
if env_local_path.exists():
    load_dotenv(env_local_path)
    logger.info(f"Loaded environment variables from {env_local_path}")

env_path = project_root / ".env"
if env_path.exists():
    load_dotenv(env_path)
    logger.info(f"Loaded environment variables from {env_path}")


class Settings(BaseSettings):
    """Application settings loaded from REGIONBOUND_* environment variables"""

    model_config = SettingsConfigDict(env_prefix="REGIONBOUND_", extra="ignore")

    # Run defaults
    seed: int = Field(default=0, description="Seed fallback when --seed is not given")
    trials: int = Field(default=200, ge=0)
    out_dir: str = Field(default="artifacts")
    log_level: str = Field(default="INFO")

    # Oracle caps
    tau1_enumeration_cap: int = Field(default=24, ge=1)
    cell_enumeration_cap: int = Field(default=16, ge=1)
    search_cap: int = Field(default=12, ge=1)
    breakpoint_budget: int = Field(default=100_000, ge=1)

    # Memo tables are cleared once they hold this many entries
    cache_limit: int = Field(default=200_000, ge=1)

    # Random arrangement sampling
    coefficient_bound: int = Field(default=20, ge=1)
    denominator_bound: int = Field(default=7, ge=1)
    max_resample: int = Field(default=1000, ge=1)

    # Server settings
    host: str = Field(default="0.0.0.0")
    port: int = Field(default=8000)
    debug: bool = Field(default=False)
    http_max_width: int = Field(default=64, ge=1)
    http_max_depth: int = Field(default=256, ge=1)


# Global settings instance
settings = Settings()
