"""
Correlation Step

Pair correlation series with rate fits, and triple correlations.
"""

from .main import CorrelationExperiment, MultipleMixingExperiment

__all__ = ["CorrelationExperiment", "MultipleMixingExperiment"]
