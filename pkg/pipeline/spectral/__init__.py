"""
Spectral Module

Fourier-Galerkin truncations of the averaged transfer operator with Sobolev
weights: spectra, high-frequency decay (essential radius surrogate),
Lasota-Yorke constants and stability sweeps.
"""

from .main import (
    FamilyMember,
    build_galerkin,
    essential_radius_estimate,
    k_sweep,
    lasota_yorke_fit,
    operator_spectrum,
    pierrehumbert_stability_sweep,
    require_galerkin_fit,
    stability_sweep,
)
from .models import (
    EssentialRadiusEstimate,
    FourierOperator,
    LasotaYorkeReport,
    ModeIndex,
    SpectralReport,
    StabilityPoint,
    StabilityReport,
    sobolev_weights,
)

__all__ = [
    "EssentialRadiusEstimate",
    "FamilyMember",
    "FourierOperator",
    "LasotaYorkeReport",
    "ModeIndex",
    "SpectralReport",
    "StabilityPoint",
    "StabilityReport",
    "build_galerkin",
    "essential_radius_estimate",
    "k_sweep",
    "lasota_yorke_fit",
    "operator_spectrum",
    "pierrehumbert_stability_sweep",
    "require_galerkin_fit",
    "sobolev_weights",
    "stability_sweep",
]
