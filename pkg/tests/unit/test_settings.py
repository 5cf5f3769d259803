"""Process settings read from LAB_* environment variables."""

import pytest
from pydantic import ValidationError

from config.settings import Settings


def test_defaults(monkeypatch):
    monkeypatch.delenv("LAB_ENVIRONMENT", raising=False)
    monkeypatch.delenv("LAB_LOG_LEVEL", raising=False)
    settings = Settings(_env_file=None)
    assert settings.environment == "development"
    assert settings.log_level == "info"
    assert settings.default_word_cap == 1_000_000


def test_environment_variables_override(monkeypatch):
    monkeypatch.setenv("LAB_ENVIRONMENT", "ci")
    monkeypatch.setenv("LAB_LOG_LEVEL", "WARNING")
    monkeypatch.setenv("LAB_DEFAULT_THREADS", "4")
    settings = Settings(_env_file=None)
    assert settings.environment == "ci"
    assert settings.log_level == "warn"
    assert settings.default_threads == 4


def test_unknown_log_level_rejected(monkeypatch):
    monkeypatch.setenv("LAB_LOG_LEVEL", "loud")
    with pytest.raises(ValidationError):
        Settings(_env_file=None)


def test_budgets_must_be_positive(monkeypatch):
    monkeypatch.setenv("LAB_BLOCK_SIZE", "0")
    with pytest.raises(ValidationError):
        Settings(_env_file=None)
