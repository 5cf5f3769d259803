"""Stats Models: band-limited observables and report records."""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel

from pipeline.core.exceptions import ConfigurationError

SYMMETRY_TOLERANCE = 1e-12


class CorrelationMethod(str, Enum):
    OPERATOR = "operator"
    MONTE_CARLO = "monte-carlo"


@dataclass(frozen=True)
class Observable:
    """
    Finite Fourier sum phi(x) = sum_m c_m e^{2 pi i <m, x>}.

    ``modes`` is (n, d) with distinct rows; ``coeffs`` is (n,) complex.
    """

    modes: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        modes = np.atleast_2d(np.asarray(self.modes, dtype=np.int64))
        coeffs = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if modes.shape[0] != coeffs.shape[0]:
            raise ConfigurationError(f"{modes.shape[0]} modes but {coeffs.shape[0]} coefficients", key="observable")
        if np.unique(modes, axis=0).shape[0] != modes.shape[0]:
            raise ConfigurationError("Observable modes must be distinct", key="observable")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "coeffs", coeffs)

    # --- constructors ---

    @classmethod
    def from_terms(cls, terms: Dict[Tuple[int, ...], complex]) -> "Observable":
        keys = list(terms)
        return cls(np.array(keys, dtype=np.int64), np.array([terms[k] for k in keys], dtype=complex))

    @classmethod
    def mode(cls, k: Sequence[int], amplitude: complex = 1.0) -> "Observable":
        """amplitude * e_k."""
        return cls(np.array([k], dtype=np.int64), np.array([amplitude], dtype=complex))

    @classmethod
    def cosine(cls, k: Sequence[int], amplitude: float = 1.0) -> "Observable":
        """amplitude * cos(2 pi <k, x>)."""
        k = tuple(int(v) for v in k)
        if not any(k):
            raise ConfigurationError("cosine of the zero mode is a constant; use constant()", key="observable")
        minus = tuple(-v for v in k)
        return cls.from_terms({k: amplitude / 2.0, minus: amplitude / 2.0})

    @classmethod
    def sine(cls, k: Sequence[int], amplitude: float = 1.0) -> "Observable":
        """amplitude * sin(2 pi <k, x>)."""
        k = tuple(int(v) for v in k)
        minus = tuple(-v for v in k)
        return cls.from_terms({k: amplitude / 2j, minus: -amplitude / 2j})

    @classmethod
    def constant(cls, d: int, value: float = 1.0) -> "Observable":
        return cls(np.zeros((1, d), dtype=np.int64), np.array([value], dtype=complex))

    # --- properties ---

    @property
    def dimension(self) -> int:
        return self.modes.shape[1]

    @property
    def K_obs(self) -> int:
        return int(np.abs(self.modes).max()) if self.modes.size else 0

    @property
    def zero_mean(self) -> bool:
        return not np.any(np.all(self.modes == 0, axis=1) & (self.coeffs != 0))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs != 0)

    @property
    def is_real(self) -> bool:
        """Conjugate symmetry c_{-k} = conj(c_k) within 1e-12."""
        lookup = {tuple(m): c for m, c in zip(self.modes.tolist(), self.coeffs)}
        for m, c in lookup.items():
            partner = lookup.get(tuple(-v for v in m), 0.0)
            if abs(partner - np.conj(c)) > SYMMETRY_TOLERANCE:
                return False
        return True

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Values at the rows of ``x``; real for real observables."""
        values = np.exp(2j * np.pi * (np.asarray(x, dtype=float) @ self.modes.T)) @ self.coeffs
        return values.real if self.is_real else values

    def pair(self, modes: np.ndarray, coeffs: np.ndarray) -> complex:
        """Bilinear pairing int phi * g dx with g = sum coeffs_m e_m."""
        total = 0j
        if modes.shape[0] == 0:
            return total
        for m, c in zip(self.modes, self.coeffs):
            hit = np.all(modes == -m, axis=1)
            if hit.any():
                total += c * coeffs[hit].sum()
        return complex(total)

    def inner(self, other: "Observable") -> complex:
        """int phi * psi dx."""
        return self.pair(other.modes, other.coeffs)

    @property
    def l2_norm_squared(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))


# ===================================================================
# REPORTS
# ===================================================================

class CorrelationSeries(BaseModel):
    """Pair correlations <phi, G^n psi> for n = 0..n_max."""
    method: CorrelationMethod
    values: List[float]
    """Real parts"""
    imag: List[float]
    stderr: List[float]
    """Zeros for the operator method"""
    samples: Optional[int] = None
    max_truncation_loss: float = 0.0
    requested_n_max: Optional[int] = None
    stopped_at: Optional[int] = None
    """Last lag computed when pushed modes outgrew the integer range (operator method)"""

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    def moduli(self) -> np.ndarray:
        return np.hypot(np.asarray(self.values), np.asarray(self.imag))


class MixingRateFit(BaseModel):
    theta_hat: Optional[float] = None
    window: Optional[Tuple[int, int]] = None
    residual: Optional[float] = None
    below_noise: bool = False
    decaying: bool = False


class TripleCorrelation(BaseModel):
    value: Tuple[float, float]
    stderr: float
    method: CorrelationMethod
    n1: int
    n2: int
    fell_back: bool = False


class GreenKuboEstimate(BaseModel):
    sigma2: Optional[float] = None
    partial_sum: float
    tail_bound: float
    theta_hat: Optional[float] = None
    n_max: int
    """Last lag summed"""
    requested_n_max: Optional[int] = None
    diagnostic: Optional[str] = None


class CLTReport(BaseModel):
    sigma2_gk: Optional[float] = None
    sigma2_mc: float
    ks_distance: Optional[float] = None
    ks_pvalue: Optional[float] = None
    N: int
    trials: int
    reference: str = "green-kubo"
    """Gaussian the KS distance is measured against: green-kubo or empirical"""
    degenerate: bool = False
    diagnostic: Optional[str] = None


class BerryEsseenRow(BaseModel):
    N: int
    ks_distance: float
    sqrtN_times_ks: float


class BerryEsseenTable(BaseModel):
    rows: List[BerryEsseenRow]
    max_sqrtN_times_ks: float
    sigma2_gk: Optional[float] = None
    reference: str = "green-kubo"
    trend_tau: Optional[float] = None
    trend_pvalue: Optional[float] = None
    growth_detected: Optional[bool] = None
    """None when N_list is too short for a trend claim"""
