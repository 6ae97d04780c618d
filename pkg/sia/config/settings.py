"""Centralized settings management using pydantic-settings."""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class CacheConfig(BaseSettings):
    """Configuration for the text-embedding cache."""

    model_config = SettingsConfigDict(
        env_prefix="SIA_CACHE_",
        extra="ignore",
    )

    # Cache backend: memory or file
    type: Literal["memory", "file"] = "memory"

    # File cache directory
    directory: str = ".cache/embeddings"


class ServerConfig(BaseSettings):
    """Configuration for the FastAPI detection server."""

    model_config = SettingsConfigDict(
        env_prefix="SIA_SERVER_",
        extra="ignore",
    )

    host: str = "127.0.0.1"
    port: int = 8000
    workers: int = 1
    inference_threads: int = 2

    # CORS
    cors_origins: List[str] = Field(default=["*"])


class Settings(BaseSettings):
    """
    Main settings class aggregating all configuration.

    Environment variables are prefixed with SIA_.
    Example: SIA_DATA_DIR=/data/ava, SIA_CACHE__TYPE=file
    """

    model_config = SettingsConfigDict(
        env_prefix="SIA_",
        env_nested_delimiter="__",
        extra="ignore",
    )

    # General
    debug: bool = False
    log_level: str = "INFO"

    # Root that relative manifest, bank and frame paths resolve against;
    # unset means the directory of the manifest that names them
    data_dir: Optional[str] = None

    # Sub-configurations
    cache: CacheConfig = Field(default_factory=CacheConfig)
    server: ServerConfig = Field(default_factory=ServerConfig)

    def resolve_path(
        self, path: Union[str, Path], base: Optional[Union[str, Path]] = None
    ) -> Path:
        """Resolve a relative path against ``data_dir``, else ``base``, else the cwd."""
        p = Path(path)
        if p.is_absolute():
            return p
        if self.data_dir is not None:
            return Path(self.data_dir) / p
        if base is not None:
            return Path(base) / p
        return p


@lru_cache
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Uses lru_cache for singleton pattern - settings are loaded once.
    Call get_settings.cache_clear() to reload.
    """
    return Settings()
