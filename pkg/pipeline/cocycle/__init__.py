"""
Cocycle Module

Expansion-on-average estimators on tangent vectors, covectors and k-planes,
the infimum search, the conormal identity, Lyapunov spectra and Furstenberg
integrals.
"""

from .main import (
    conormal_check,
    cotangent_expansion,
    expansion_lambda,
    furstenberg_integral,
    kplane_expansion,
    lyapunov_spectrum,
    sphere_design,
    tangent_expansion,
)
from .models import (
    CocycleBudget,
    CotangentFrame,
    EstimateMode,
    ExpansionEstimate,
    FrameKind,
    FurstenbergEstimate,
    LyapunovReport,
    PlaneFrame,
    SearchPlan,
)

__all__ = [
    "CocycleBudget",
    "CotangentFrame",
    "EstimateMode",
    "ExpansionEstimate",
    "FrameKind",
    "FurstenbergEstimate",
    "LyapunovReport",
    "PlaneFrame",
    "SearchPlan",
    "conormal_check",
    "cotangent_expansion",
    "expansion_lambda",
    "furstenberg_integral",
    "kplane_expansion",
    "lyapunov_spectrum",
    "sphere_design",
    "tangent_expansion",
]
