"""
Core experiment infrastructure.

This package contains the core components shared by every experiment:
- BaseExperiment: Abstract base class for all experiments
- ExperimentRunner: Dispatches a run to the registered experiment
- streams: deterministic Philox streams and block-parallel map

Data models are in pipeline.models.core
Custom exceptions are in pipeline.core.exceptions
"""

from pipeline.core.runner import BaseExperiment, ExperimentRunner

__all__ = [
    "BaseExperiment",
    "ExperimentRunner",
]
