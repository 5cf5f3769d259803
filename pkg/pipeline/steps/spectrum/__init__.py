"""
Spectrum Step

Galerkin spectra, high-frequency decay, Lasota-Yorke constants, stability
sweeps and the dd distance between driving measures.
"""

from .main import (
    DdDistanceExperiment,
    EssentialRadiusExperiment,
    LasotaYorkeExperiment,
    SpectrumExperiment,
    StabilityExperiment,
)

__all__ = [
    "SpectrumExperiment",
    "EssentialRadiusExperiment",
    "LasotaYorkeExperiment",
    "StabilityExperiment",
    "DdDistanceExperiment",
]
