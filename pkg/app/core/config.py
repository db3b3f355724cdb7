# app/core/config.py

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

DEFAULT_ENVIRONMENT = "production"


class Settings(BaseSettings):
    # Application Configuration
    environment: str = Field(default = DEFAULT_ENVIRONMENT)
    log_level: str = Field(default = "INFO")

    # Oracle guards
    strict_non_negative: bool = Field(default = True)
    audit_thresholds: bool = Field(default = False)

    # Algorithm defaults
    usm_alpha: float = Field(default = 3.0, ge = 2.0)
    default_epsilon: float = Field(default = 0.1, gt = 0.0, lt = 0.5)
    default_delta: float = Field(default = 0.1, gt = 0.0, lt = 0.5)

    # Ratio harness
    harness_trials: int = Field(default = 200, ge = 1)
    harness_seed: int = Field(default = 1)
    harness_max_n: int = Field(default = 10, ge = 1, le = 20)

    model_config = SettingsConfigDict(
        env_file = ".env",
        env_prefix = "SUBGREEDY_",
        case_sensitive = False,
        extra = "ignore",
    )


settings = Settings()
is_prod_env = settings.environment == DEFAULT_ENVIRONMENT
