from functools import lru_cache

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.exceptions import CapacityExceededError

# Load environment variables
load_dotenv()


class Settings(BaseSettings):
    """Runtime configuration, read from LAB_* environment variables."""

    model_config = SettingsConfigDict(env_prefix="LAB_", extra="ignore")

    # Capacity guard for dense state vectors
    max_amplitudes: int = 2**26
    workers: int = 1
    log_level: str = "INFO"
    schema_version: str = "1.0"


@lru_cache()
def get_settings() -> Settings:
    """Get the cached settings instance."""
    return Settings()


def check_capacity(required: int, limit: int = None) -> None:
    """Raise if a dense object with `required` amplitudes is over the limit."""
    limit = get_settings().max_amplitudes if limit is None else limit
    if required > limit:
        raise CapacityExceededError(required, limit)
