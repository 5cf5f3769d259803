"""Root conftest.py for pytest configuration.

This file configures pytest for the entire project, ensuring:
- Proper Python path setup for imports
- Logfire configured without a remote backend
- Shared model and measure fixtures
"""

import sys
from pathlib import Path

import logfire
import numpy as np
import pytest

from observability.logfire_config import LogfireConfig


# ============================================================================
# Python Path Configuration
# ============================================================================

def pytest_configure(config):
    """Configure pytest and ensure the project root is on sys.path."""

    project_root = Path(__file__).parent.resolve()
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))

    # Test runs never ship spans anywhere; the CLI reuses this configuration
    LogfireConfig.initialize(console=False, send=False, service_name="annealed-lab-tests")

    logfire.info("Starting test suite", project_root=str(project_root))


def pytest_sessionfinish(session, exitstatus):
    """Log test session completion."""
    logfire.info(
        "Test suite completed",
        exit_status=exitstatus,
        tests_collected=session.testscollected,
        tests_failed=session.testsfailed,
    )


# ============================================================================
# Shared Fixtures
# ============================================================================

@pytest.fixture(scope="session")
def project_root():
    """Return the absolute path to the project root directory."""
    return Path(__file__).parent.resolve()


@pytest.fixture
def cat_matrix():
    return np.array([[2.0, 1.0], [1.0, 1.0]])


@pytest.fixture
def affine_model():
    """Factory for affine torus models: affine_model({"A": (matrix, offset), ...})."""
    from pipeline.maps import AffineTorusConfig, build_model

    def _build(maps: dict):
        specs = [
            {"id": map_id, "matrix": np.asarray(m).tolist(), "offset": None if b is None else list(b)}
            for map_id, (m, b) in maps.items()
        ]
        return build_model(AffineTorusConfig(maps=specs))

    return _build


@pytest.fixture
def cat_model(affine_model, cat_matrix):
    """Cat map on T^2, registered measure delta_A."""
    return affine_model({"A": (cat_matrix, None)})


@pytest.fixture
def output_root(tmp_path, monkeypatch):
    """Temporary output root for CLI runs."""
    root = tmp_path / "runs"
    monkeypatch.setenv("LAB_OUTPUT_ROOT", str(root))
    return root


@pytest.fixture
def experiment_data():
    """Factory for run state: experiment_data("spectrum", {"K": 4}, model=...)."""
    from pipeline.cocycle import CocycleBudget
    from pipeline.models.core import ExperimentData
    from schemas.experiment import PARAMETER_MODELS

    def _build(experiment, parameters, model=None, measure=None, seed=0, threads=1, **budget):
        if measure is None and model is not None:
            measure = model.default_measure
        return ExperimentData(
            run_id=f"test-{experiment}",
            experiment=experiment,
            parameters=PARAMETER_MODELS[experiment].model_validate(parameters),
            config_hash="0" * 64,
            seed=seed,
            threads=threads,
            model=model,
            measure=measure,
            budget=CocycleBudget(seed=seed, threads=threads, **budget),
        )

    return _build
