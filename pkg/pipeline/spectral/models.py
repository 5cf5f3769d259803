"""Spectral Models: Fourier mode boxes, truncated operators and report records."""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel

from pipeline.core.exceptions import ConfigurationError


def sobolev_weights(modes: np.ndarray, s: float) -> np.ndarray:
    """(1 + |k|^2)^(s/2) for every row of ``modes``."""
    return (1.0 + np.sum(np.asarray(modes, dtype=float) ** 2, axis=-1)) ** (s / 2.0)


@dataclass(frozen=True)
class ModeIndex:
    """
    Box |k|_inf <= K in Z^d, enumerated in mixed radix (first coordinate most significant).

    Example:
        >>> ModeIndex(d=2, K=1).modes[:3].tolist()
        [[-1, -1], [-1, 0], [-1, 1]]
    """

    d: int
    K: int

    def __post_init__(self):
        if self.K < 1:
            raise ConfigurationError(f"Box radius K must be >= 1, got {self.K}", key="K")
        if self.d < 1:
            raise ConfigurationError(f"Dimension must be >= 1, got {self.d}", key="d")

    @property
    def side(self) -> int:
        return 2 * self.K + 1

    @property
    def size(self) -> int:
        return self.side ** self.d

    @cached_property
    def modes(self) -> np.ndarray:
        grids = np.indices((self.side,) * self.d).reshape(self.d, -1).T
        return grids.astype(np.int64) - self.K

    @property
    def zero(self) -> int:
        """Index of the constant mode."""
        return int(self.index_of(np.zeros((1, self.d), dtype=np.int64))[0])

    def contains(self, k: np.ndarray) -> np.ndarray:
        return np.all(np.abs(np.atleast_2d(k)) <= self.K, axis=-1)

    def index_of(self, k: np.ndarray) -> np.ndarray:
        """Flat indices of the rows of ``k``; -1 for modes outside the box."""
        k = np.atleast_2d(np.asarray(k, dtype=np.int64))
        inside = self.contains(k)
        out = np.full(k.shape[0], -1, dtype=np.int64)
        if np.any(inside):
            shifted = (k[inside] + self.K).T
            out[inside] = np.ravel_multi_index(tuple(shifted), (self.side,) * self.d)
        return out

    def weights(self, s: float) -> np.ndarray:
        return sobolev_weights(self.modes, s)


@dataclass
class FourierOperator:
    """
    Averaged transfer operator restricted to a mode box.

    Entry (m, k) is the coefficient of e_m in G e_k. Entries are stored
    unweighted; ``weighted(s)`` applies the similarity D G D^-1 with
    D = diag((1 + |k|^2)^(s/2)).
    """

    index: ModeIndex
    matrix: sp.csc_matrix
    s: float = 0.0
    truncation_loss: np.ndarray = field(default_factory=lambda: np.zeros(0))
    """Per column, total absolute weight mapped outside the box"""
    model_hash: bytes = b"\x00" * 32

    @property
    def K(self) -> int:
        return self.index.K

    @property
    def max_truncation_loss(self) -> float:
        return float(self.truncation_loss.max()) if self.truncation_loss.size else 0.0

    def weighted(self, s: Optional[float] = None) -> sp.csc_matrix:
        s = self.s if s is None else s
        w = self.index.weights(s)
        return sp.csc_matrix(sp.diags(w) @ self.matrix @ sp.diags(1.0 / w))

    def dense(self, s: float = 0.0) -> np.ndarray:
        return self.weighted(s).toarray()

    def apply(self, coefficients: np.ndarray, power: int = 1) -> np.ndarray:
        """G^power applied to a coefficient vector (unweighted)."""
        out = np.asarray(coefficients, dtype=complex)
        for _ in range(power):
            out = self.matrix @ out
        return out


# ===================================================================
# REPORTS
# ===================================================================

class SpectralReport(BaseModel):
    """Eigenvalues are stored as (re, im) pairs sorted by decreasing modulus."""
    K: int
    s: float
    eigenvalues: List[Tuple[float, float]]
    subleading_modulus: Optional[float] = None
    subleading_eigenvalue: Optional[Tuple[float, float]] = None
    unit_multiplicity: int = 0
    peripheral_count: int = 0
    weak_mixing_violation: bool = False
    """True when a non-constant eigenvalue has modulus within 1e-6 of 1"""
    blocks: int = 0
    max_truncation_loss: float = 0.0
    diagnostic: Optional[str] = None


class EssentialRadiusEstimate(BaseModel):
    eta_hat: float
    slope: float
    intercept: float
    fit_range: Tuple[int, int]
    s: float
    r: float
    log_rho_max: List[float]
    """ln max_k rho_n(k) for n = 1..n_max"""
    rho: Dict[str, List[float]]
    """rho_n(k) per witness mode (key "k1,k2,...")"""
    covector_eta: Optional[float] = None
    covector_bound: List[float] = []
    """sup over witness covectors of the averaged ||(D f)^T xi||^-s for n = 1..n_max"""
    exact: bool = True
    max_truncation_loss: float = 0.0


class LasotaYorkeReport(BaseModel):
    s: float
    s_bar: float
    eta: float
    constants: Dict[int, float]
    """Minimal C_n per n over the witness set"""
    gapless: bool
    feasible: bool


class StabilityPoint(BaseModel):
    label: str
    parameter: Optional[float] = None
    subleading: Optional[Tuple[float, float]] = None
    subleading_modulus: Optional[float] = None
    deviation: Optional[float] = None
    modulus_deviation: Optional[float] = None
    dd: Optional[float] = None
    max_truncation_loss: float = 0.0


class StabilityReport(BaseModel):
    K: int
    s: float
    base: StabilityPoint
    members: List[StabilityPoint]
    loglog_slope: Optional[float] = None
    slope_against: Optional[str] = None
