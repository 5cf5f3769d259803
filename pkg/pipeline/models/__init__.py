"""
Models package for run-state models

NOTE: the map zoo lives in pipeline.maps
"""

from .core import (
    ExperimentData,
    ExperimentResult,
)

__all__ = [
    "ExperimentData",
    "ExperimentResult",
]
