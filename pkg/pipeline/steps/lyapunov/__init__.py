"""
Lyapunov Step

QR Lyapunov spectrum with an optional Furstenberg-integral cross-check.
"""

from .main import LyapunovExperiment

__all__ = ["LyapunovExperiment"]
