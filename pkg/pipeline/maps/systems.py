"""
Random Systems

Concrete map tables. Every system evaluates batches of points (shape (n, d))
for a map id that may carry a transform suffix ('^-1', '^T', '^-T'), with an
optional phase (scalar or one value per point). Derivatives are closed forms:
``jacobian`` returns (n, d, d) and ``hessian`` returns (n, d, d, d) with
hessian[:, i, j, k] = d^2 f_i / dx_j dx_k.
"""

from abc import ABC, abstractmethod
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from pipeline.core.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    UnsupportedTransformError,
)
from pipeline.measure.models import DrivingMeasure, MeasureKind, TransformKind
from pipeline.measure.utils import involves_inverse, involves_transpose, split_map_id

from .models import wrap_unit

TWO_PI = 2.0 * np.pi


def _phase(phase, default: float = 0.0):
    if phase is None:
        return default
    return np.asarray(phase, dtype=float)


class RandomSystem(ABC):
    """
    Base class for all registered models.

    Attributes:
        variant: Config variant name
        model_id: Stable identifier (used in reports and operator exports)
        state_dimension: Dimension of the base state space (0 for a point base)
        fiber_dimension: Dimension the derivative cocycle acts on
        is_linear: True for linear/affine models (transposes allowed)
        volume_preserving: |det D f| = 1 for every map
        constant_derivative: D f does not depend on the point
        default_measure: Driving measure registered with the model
    """

    variant: str = ""
    is_linear: bool = False
    volume_preserving: bool = True
    constant_derivative: bool = False

    def __init__(self, model_id: str, state_dimension: int, default_measure: DrivingMeasure):
        self.model_id = model_id
        self.state_dimension = state_dimension
        self.default_measure = default_measure

    @property
    def fiber_dimension(self) -> int:
        return self.state_dimension

    @property
    @abstractmethod
    def base_ids(self) -> Tuple[str, ...]:
        """Untransformed map ids of the table."""

    def resolve(self, map_id: str) -> Tuple[str, TransformKind]:
        """Split and validate a map id against the table."""
        base, kind = split_map_id(map_id)
        if base not in self.base_ids:
            raise ConfigurationError(
                f"Unknown map '{map_id}' for model '{self.model_id}' (known: {', '.join(self.base_ids)})",
                key="measure.atoms",
            )
        if involves_transpose(kind) and not self.is_linear:
            raise UnsupportedTransformError(f"Transpose requested on nonlinear model '{self.variant}'")
        return base, kind

    def _check_points(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        if x.shape[1] != self.state_dimension:
            raise DimensionMismatchError(
                f"Point dimension {x.shape[1]} does not match model dimension {self.state_dimension}"
            )
        return x

    @abstractmethod
    def forward(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        """Evaluate the map at every row of ``x``."""

    @abstractmethod
    def jacobian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        """Fiber derivative at every row of ``x``."""

    @abstractmethod
    def hessian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        """Second derivative at every row of ``x``."""


# ===================================================================
# LINEAR AND AFFINE MODELS
# ===================================================================

class _MatrixTable(RandomSystem):
    """Shared matrix bookkeeping for affine-torus and linear-cocycle models."""

    is_linear = True
    constant_derivative = True

    def __init__(self, model_id: str, state_dimension: int, matrices: Dict[str, np.ndarray],
                 default_measure: DrivingMeasure):
        super().__init__(model_id, state_dimension, default_measure)
        self.matrices = {k: np.asarray(v, dtype=float) for k, v in matrices.items()}
        self._inverses = {k: np.linalg.inv(v) for k, v in self.matrices.items()}
        self.volume_preserving = all(
            abs(abs(np.linalg.det(m)) - 1.0) <= 1e-10 for m in self.matrices.values()
        )

    @property
    def base_ids(self) -> Tuple[str, ...]:
        return tuple(self.matrices)

    @property
    def dimension(self) -> int:
        return next(iter(self.matrices.values())).shape[0]

    def linear_part(self, map_id: str) -> np.ndarray:
        """Matrix of the (possibly transformed) map."""
        base, kind = self.resolve(map_id)
        matrix = self._inverses[base] if involves_inverse(kind) else self.matrices[base]
        return matrix.T if involves_transpose(kind) else matrix

    def jacobian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        return np.broadcast_to(self.linear_part(map_id), (x.shape[0], self.dimension, self.dimension)).copy()

    def hessian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        d = self.state_dimension
        return np.zeros((x.shape[0], d, d, d))


class AffineTorusModel(_MatrixTable):
    """
    Maps x -> A_j x + b_j on T^d, A_j integer with det = +-1.

    Transforms: S^T is x -> A^T x + b, S^-1 is x -> A^-1 (x - b) and
    S^-T is x -> A^-T (x - b).
    """

    variant = "affine-torus"

    def __init__(self, model_id: str, matrices: Dict[str, np.ndarray], offsets: Dict[str, np.ndarray],
                 default_measure: DrivingMeasure):
        d = next(iter(matrices.values())).shape[0]
        super().__init__(model_id, d, matrices, default_measure)
        # Integer inverses are exact for unimodular matrices
        self._inverses = {k: np.rint(v) for k, v in self._inverses.items()}
        self.offsets = {k: np.asarray(offsets.get(k, np.zeros(d)), dtype=float) for k in matrices}

    def affine_parts(self, map_id: str) -> Tuple[np.ndarray, np.ndarray]:
        """(M, c) with the transformed map equal to x -> M x + c (mod 1)."""
        base, kind = self.resolve(map_id)
        matrix = self.linear_part(map_id)
        offset = self.offsets[base]
        if involves_inverse(kind):
            return matrix, -(matrix @ offset)
        return matrix, offset

    def forward(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        matrix, offset = self.affine_parts(map_id)
        return wrap_unit(x @ matrix.T + offset)


class LinearCocycleModel(_MatrixTable):
    """Matrix cocycle over a one-point base; the state is a formal point."""

    variant = "linear-cocycle"

    def __init__(self, model_id: str, matrices: Dict[str, np.ndarray], default_measure: DrivingMeasure):
        super().__init__(model_id, 0, matrices, default_measure)

    @property
    def fiber_dimension(self) -> int:
        return self.dimension

    def forward(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        self.resolve(map_id)
        return self._check_points(x)

    def hessian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        d = self.dimension
        return np.zeros((x.shape[0], d, d, d))


# ===================================================================
# NONLINEAR MODELS
# ===================================================================

class PierrehumbertModel(RandomSystem):
    """
    Random-phase sine shears on the normalized torus.

    H_t(x, y) = (x + (tau/2pi) sin(2pi(y + t)), y)
    V_t(x, y) = (x, y + (tau/2pi) sin(2pi(x + t)))

    The registered measure is the convolution mu_V * mu_H of two uniform-phase
    families, V applied first.
    """

    variant = "pierrehumbert"
    HORIZONTAL = "H"
    VERTICAL = "V"

    def __init__(self, model_id: str, tau: float):
        measure = DrivingMeasure(
            kind=MeasureKind.CONVOLUTION,
            factors=(
                DrivingMeasure(kind=MeasureKind.PARAMETRIC, family=self.VERTICAL, phase_period=1.0),
                DrivingMeasure(kind=MeasureKind.PARAMETRIC, family=self.HORIZONTAL, phase_period=1.0),
            ),
        )
        super().__init__(model_id, 2, measure)
        self.tau = float(tau)

    @property
    def base_ids(self) -> Tuple[str, ...]:
        return (self.HORIZONTAL, self.VERTICAL)

    def _axes(self, base: str) -> Tuple[int, int]:
        # (moved coordinate, driving coordinate)
        return (0, 1) if base == self.HORIZONTAL else (1, 0)

    def forward(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        base, kind = self.resolve(map_id)
        moved, driver = self._axes(base)
        sign = -1.0 if involves_inverse(kind) else 1.0
        out = x.copy()
        out[:, moved] = x[:, moved] + sign * self.tau / TWO_PI * np.sin(TWO_PI * (x[:, driver] + _phase(phase)))
        return wrap_unit(out)

    def jacobian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        base, kind = self.resolve(map_id)
        moved, driver = self._axes(base)
        sign = -1.0 if involves_inverse(kind) else 1.0
        jac = np.broadcast_to(np.eye(2), (x.shape[0], 2, 2)).copy()
        jac[:, moved, driver] = sign * self.tau * np.cos(TWO_PI * (x[:, driver] + _phase(phase)))
        return jac

    def hessian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        base, kind = self.resolve(map_id)
        moved, driver = self._axes(base)
        sign = -1.0 if involves_inverse(kind) else 1.0
        hess = np.zeros((x.shape[0], 2, 2, 2))
        hess[:, moved, driver, driver] = -sign * TWO_PI * self.tau * np.sin(TWO_PI * (x[:, driver] + _phase(phase)))
        return hess


class StandardMapModel(RandomSystem):
    """
    Randomly kicked standard map f(x, y) = (L psi(x) - y + omega, x) mod 1.

    psi(x) = sin(2pi x)/(2pi). The phase is uniform on [0, 2 eps) and
    omega = phase - eps; a missing phase means omega = 0.
    """

    variant = "standard-map"
    FAMILY = "f"

    def __init__(self, model_id: str, kick_strength: float, noise_half_width: float):
        measure = DrivingMeasure(
            kind=MeasureKind.PARAMETRIC, family=self.FAMILY, phase_period=2.0 * noise_half_width
        )
        super().__init__(model_id, 2, measure)
        self.kick_strength = float(kick_strength)
        self.noise_half_width = float(noise_half_width)

    @property
    def base_ids(self) -> Tuple[str, ...]:
        return (self.FAMILY,)

    def omega(self, phase) -> np.ndarray | float:
        return _phase(phase, self.noise_half_width) - self.noise_half_width

    def _psi(self, x):
        return np.sin(TWO_PI * x) / TWO_PI

    def _dpsi(self, x):
        return np.cos(TWO_PI * x)

    def _d2psi(self, x):
        return -TWO_PI * np.sin(TWO_PI * x)

    def forward(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        _, kind = self.resolve(map_id)
        L, omega = self.kick_strength, self.omega(phase)
        u, v = x[:, 0], x[:, 1]
        if involves_inverse(kind):
            out = np.stack([v, L * self._psi(v) - u + omega], axis=1)
        else:
            out = np.stack([L * self._psi(u) - v + omega, u], axis=1)
        return wrap_unit(out)

    def jacobian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        _, kind = self.resolve(map_id)
        L = self.kick_strength
        jac = np.zeros((x.shape[0], 2, 2))
        if involves_inverse(kind):
            jac[:, 0, 1] = 1.0
            jac[:, 1, 0] = -1.0
            jac[:, 1, 1] = L * self._dpsi(x[:, 1])
        else:
            jac[:, 0, 0] = L * self._dpsi(x[:, 0])
            jac[:, 0, 1] = -1.0
            jac[:, 1, 0] = 1.0
        return jac

    def hessian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        x = self._check_points(x)
        _, kind = self.resolve(map_id)
        L = self.kick_strength
        hess = np.zeros((x.shape[0], 2, 2, 2))
        if involves_inverse(kind):
            hess[:, 1, 1, 1] = L * self._d2psi(x[:, 1])
        else:
            hess[:, 0, 0, 0] = L * self._d2psi(x[:, 0])
        return hess


# ===================================================================
# PRODUCT LIFT
# ===================================================================

class ProductLiftModel(RandomSystem):
    """
    k-point motion: the same sampled map acts on k copies of the base.

    Points are stored as k consecutive blocks of the base coordinates; the
    fiber derivative is block-diagonal with k identical blocks.
    """

    variant = "product-lift"

    def __init__(self, base: RandomSystem, copies: int):
        super().__init__(f"{base.model_id}^{copies}", copies * base.state_dimension, base.default_measure)
        self.base = base
        self.copies = copies
        self.is_linear = base.is_linear
        self.volume_preserving = base.volume_preserving
        self.constant_derivative = base.constant_derivative

    @property
    def base_ids(self) -> Tuple[str, ...]:
        return self.base.base_ids

    @property
    def fiber_dimension(self) -> int:
        return self.copies * self.base.fiber_dimension

    def _split(self, x: np.ndarray, phase) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        x = self._check_points(x)
        n = x.shape[0]
        stacked = x.reshape(n * self.copies, self.base.state_dimension)
        if phase is None or np.ndim(phase) == 0:
            return stacked, phase
        return stacked, np.repeat(np.asarray(phase, dtype=float), self.copies)

    def forward(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        stacked, phases = self._split(x, phase)
        out = self.base.forward(map_id, stacked, phases)
        return out.reshape(-1, self.state_dimension)

    def _block_diag(self, blocks: np.ndarray, n: int) -> np.ndarray:
        d = self.base.fiber_dimension
        blocks = blocks.reshape(n, self.copies, d, d)
        out = np.zeros((n, self.fiber_dimension, self.fiber_dimension))
        for c in range(self.copies):
            out[:, c * d:(c + 1) * d, c * d:(c + 1) * d] = blocks[:, c]
        return out

    def jacobian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        n = self._check_points(x).shape[0]
        if self.state_dimension == 0:
            block = self.base.jacobian(map_id, np.zeros((n, 0)), phase)
            return self._block_diag(np.repeat(block, self.copies, axis=0), n)
        stacked, phases = self._split(x, phase)
        return self._block_diag(self.base.jacobian(map_id, stacked, phases), n)

    def hessian(self, map_id: str, x: np.ndarray, phase=None) -> np.ndarray:
        if self.state_dimension == 0:
            f = self.fiber_dimension
            return np.zeros((self._check_points(x).shape[0], f, f, f))
        stacked, phases = self._split(x, phase)
        n = stacked.shape[0] // self.copies
        d = self.base.state_dimension
        blocks = self.base.hessian(map_id, stacked, phases).reshape(n, self.copies, d, d, d)
        out = np.zeros((n, self.state_dimension, self.state_dimension, self.state_dimension))
        for c in range(self.copies):
            s = slice(c * d, (c + 1) * d)
            out[:, s, s, s] = blocks[:, c]
        return out

    def affine_parts(self, map_id: str) -> Tuple[np.ndarray, np.ndarray]:
        """Block-diagonal (M, c) of a lifted affine map."""
        if not isinstance(self.base, AffineTorusModel):
            raise UnsupportedTransformError(f"Product of '{self.base.variant}' has no affine form")
        matrix, offset = self.base.affine_parts(map_id)
        d = matrix.shape[0]
        big = np.zeros((self.state_dimension, self.state_dimension))
        for c in range(self.copies):
            big[c * d:(c + 1) * d, c * d:(c + 1) * d] = matrix
        return big, np.tile(offset, self.copies)


def uniform_or_weighted(ids: Sequence[str], weights: Sequence[Optional[float]]) -> DrivingMeasure:
    """Registered measure of a table: uniform unless every entry carries a weight."""
    if all(w is None for w in weights):
        return DrivingMeasure.uniform(list(ids))
    if any(w is None for w in weights):
        raise ConfigurationError("Either all maps carry a weight or none does", key="model.maps")
    return DrivingMeasure.finite(list(zip(ids, weights)))
