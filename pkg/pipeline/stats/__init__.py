"""
Stats Module

Annealed decay of correlations, multiple mixing and the quenched-versus-
annealed central limit experiments built on mode-space propagation.
"""

from .main import (
    berry_esseen_scaling,
    clt_experiment,
    correlation_series,
    green_kubo_variance,
    mixing_rate_fit,
    triple_correlation,
)
from .models import (
    BerryEsseenRow,
    BerryEsseenTable,
    CLTReport,
    CorrelationMethod,
    CorrelationSeries,
    GreenKuboEstimate,
    MixingRateFit,
    Observable,
    TripleCorrelation,
)

__all__ = [
    "BerryEsseenRow",
    "BerryEsseenTable",
    "CLTReport",
    "CorrelationMethod",
    "CorrelationSeries",
    "GreenKuboEstimate",
    "MixingRateFit",
    "Observable",
    "TripleCorrelation",
    "berry_esseen_scaling",
    "clt_experiment",
    "correlation_series",
    "green_kubo_variance",
    "mixing_rate_fit",
    "triple_correlation",
]
