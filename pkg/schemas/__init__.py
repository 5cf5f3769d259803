"""
Pydantic schemas for experiment configs and reports.
"""

from schemas.experiment import (
    EXPERIMENTS,
    PARAMETER_MODELS,
    ExperimentConfig,
    MeasureConfig,
    ObservableConfig,
)
from schemas.report import (
    ARTIFACT_VERSION,
    ErrorDetail,
    ErrorObject,
    Provenance,
    RunReport,
    SuiteReport,
    SuiteRow,
)
from schemas.suite import SuiteCheck, SuiteManifest

__all__ = [
    # Config schemas
    "EXPERIMENTS",
    "PARAMETER_MODELS",
    "ExperimentConfig",
    "MeasureConfig",
    "ObservableConfig",

    # Report schemas
    "ARTIFACT_VERSION",
    "ErrorDetail",
    "ErrorObject",
    "Provenance",
    "RunReport",
    "SuiteReport",
    "SuiteRow",

    # Suite manifests
    "SuiteCheck",
    "SuiteManifest",
]
