"""Cocycle Models: frames, budgets, search plans and estimate records."""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from config.settings import settings
from pipeline.core.exceptions import ConfigurationError

UNIT_TOLERANCE = 1e-12
ORTHONORMAL_TOLERANCE = 1e-10


class EstimateMode(str, Enum):
    EXACT = "exact-enumeration"
    MONTE_CARLO = "monte-carlo"


class FrameKind(str, Enum):
    """Which bundle the cocycle acts on."""
    TANGENT = "tangent"
    COTANGENT = "cotangent"


# ===================================================================
# FRAMES
# ===================================================================

@dataclass(frozen=True)
class CotangentFrame:
    """Unit covector at a base point (empty base for point-base bundles)."""

    base: Tuple[float, ...]
    covector: Tuple[float, ...]

    def __post_init__(self):
        norm = float(np.linalg.norm(self.covector))
        if abs(norm - 1.0) > UNIT_TOLERANCE:
            raise ConfigurationError(f"Covector must have unit norm (got {norm:.3g})", key="frame.covector")

    @classmethod
    def at(cls, base, covector) -> "CotangentFrame":
        """Normalize ``covector``; a zero covector is rejected."""
        v = np.asarray(covector, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0.0 or not np.isfinite(norm):
            raise ConfigurationError("Zero covector", key="frame.covector")
        return cls(tuple(float(b) for b in np.asarray(base, dtype=float).reshape(-1)), tuple(float(c) for c in v / norm))

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.covector, dtype=float)


@dataclass(frozen=True)
class PlaneFrame:
    """Orthonormal basis (columns) of a k-plane at a base point."""

    base: Tuple[float, ...]
    basis: Tuple[Tuple[float, ...], ...]
    """Rows are the k basis vectors"""

    def __post_init__(self):
        b = self.matrix
        if b.shape[1] < 1 or b.shape[1] > b.shape[0]:
            raise ConfigurationError(f"Plane dimension {b.shape[1]} outside [1, {b.shape[0]}]", key="frame.basis")
        gram = b.T @ b
        if np.max(np.abs(gram - np.eye(b.shape[1]))) > ORTHONORMAL_TOLERANCE:
            raise ConfigurationError("Plane basis is not orthonormal", key="frame.basis")

    @classmethod
    def spanning(cls, base, vectors) -> "PlaneFrame":
        """Orthonormalize ``vectors`` (rows) by QR; degenerate frames are rejected."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float)).T
        q, r = np.linalg.qr(v)
        if np.min(np.abs(np.diag(r))) < 1e-12:
            raise ConfigurationError("Degenerate plane frame", key="frame.basis")
        return cls(
            tuple(float(x) for x in np.asarray(base, dtype=float).reshape(-1)),
            tuple(tuple(float(x) for x in col) for col in q.T),
        )

    @property
    def matrix(self) -> np.ndarray:
        """d x k matrix with the basis as columns."""
        return np.asarray(self.basis, dtype=float).T

    @property
    def k(self) -> int:
        return len(self.basis)


# ===================================================================
# BUDGETS AND PLANS
# ===================================================================

class CocycleBudget(BaseModel):
    """Sampling budget shared by the estimators."""
    model_config = ConfigDict(extra="forbid")

    word_cap: int = Field(default_factory=lambda: settings.default_word_cap, ge=1)
    mc_samples: int = Field(default_factory=lambda: settings.default_mc_samples, ge=2)
    seed: int = 0
    threads: int = Field(default_factory=lambda: settings.default_threads, ge=1)
    block_size: int = Field(default_factory=lambda: settings.block_size, ge=1)


class SearchPlan(BaseModel):
    """
    Infimum search over (base point, frame).

    ``points_per_axis``/``directions`` of None select the defaults by
    dimension; ``coarse_words`` bounds the common word set of the coarse pass.
    """
    model_config = ConfigDict(extra="forbid")

    points_per_axis: Optional[int] = Field(default=None, ge=0)
    directions: Optional[int] = Field(default=None, ge=0)
    refinement_rounds: int = Field(default=3, ge=0)
    coarse_words: int = Field(default=512, ge=2)


# ===================================================================
# RESULTS
# ===================================================================

class ExpansionEstimate(BaseModel):
    """Estimate of a per-step expansion rate (value already divided by N)."""
    value: float
    stderr: float = 0.0
    samples: int
    mode: EstimateMode
    steps: int
    per_step: bool = True
    witness: Optional[Dict[str, Any]] = None
    fell_back: bool = False
    """True when exact enumeration exceeded the word cap and Monte Carlo was used instead"""


class LyapunovReport(BaseModel):
    exponents: List[float]
    orbit_length: int
    reorthonormalization_period: int
    confidence: List[float]
    retried: bool = False


class FurstenbergEstimate(BaseModel):
    value: float
    stderr: float
    samples: int
    chains: int
