"""Configuration management for sia."""

from sia.config.settings import CacheConfig, ServerConfig, Settings, get_settings

__all__ = ["CacheConfig", "ServerConfig", "Settings", "get_settings"]
