import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    """运行配置，全部可用 SSDIV_* 环境变量或 .env 覆盖"""
    model_config = SettingsConfigDict(env_prefix="SSDIV_", env_file=".env", extra="ignore")

    # SSDIV_WORKERS: 渲染线程池默认大小
    workers: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    # MBR 模式下的 tile 边长（像素）
    tile: int = Field(16, ge=1)
    dwell: int = Field(512, ge=1)
    reps: int = Field(5, ge=1)
    seed: int = 42
    trials: int = Field(100_000, ge=1)
    log_level: str = "INFO"


@lru_cache
def get_settings() -> Settings:
    return Settings()
