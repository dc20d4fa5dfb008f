from dotenv import load_dotenv
from loguru import logger
from pydantic_settings import BaseSettings, SettingsConfigDict


load_dotenv()


class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"
    LOG_DIR: str = "logs"

    QUAD_TOL: float = 1e-9
    QUAD_REL_TOL: float = 1e-10
    QUAD_LIMIT: int = 200

    MC_CHUNK: int = 1_000_000
    SIM_CHUNK: int = 262_144

    DEFAULT_SEED: int = 2024
    DEFAULT_SLOTS: int = 1_000_000
    WARMUP_FRACTION: float = 0.01
    WORKERS: int = 1
    STABLE_DRIFT_TOLERANCE: float = 0.01

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        logger.debug("✅ Settings initialized successfully")
        logger.debug(
            f"🔹 QUAD_TOL: {self.QUAD_TOL}, QUAD_REL_TOL: {self.QUAD_REL_TOL}, "
            f"QUAD_LIMIT: {self.QUAD_LIMIT}"
        )
        logger.debug(f"🔹 DEFAULT_SEED: {self.DEFAULT_SEED}, WORKERS: {self.WORKERS}")


settings = Settings()
