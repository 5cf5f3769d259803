"""
Configuration module for the lab.
Exports the settings instance for use throughout the package.
"""

from config.settings import settings

__all__ = ["settings"]
