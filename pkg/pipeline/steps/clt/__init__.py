"""
CLT Step

Birkhoff-sum distributions against the Green-Kubo Gaussian.
"""

from .main import BerryEsseenExperiment, CLTExperiment

__all__ = ["CLTExperiment", "BerryEsseenExperiment"]
