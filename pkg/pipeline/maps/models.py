"""Map Zoo Models: point/derivative value types and the pydantic model configs."""

from dataclasses import dataclass
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

UNIMODULAR_TOLERANCE = 1e-10


def wrap_unit(values: np.ndarray) -> np.ndarray:
    """Reduce coordinates to [0, 1); values that round up to 1.0 become 0.0."""
    wrapped = np.mod(values, 1.0)
    return np.where(wrapped >= 1.0, 0.0, wrapped)


# ===================================================================
# VALUE TYPES
# ===================================================================

@dataclass(frozen=True)
class TorusPoint:
    """Point of R^d/Z^d; coordinates are reduced to [0, 1) on construction."""

    coords: Tuple[float, ...]

    def __post_init__(self):
        reduced = wrap_unit(np.asarray(self.coords, dtype=float).reshape(-1))
        object.__setattr__(self, "coords", tuple(float(c) for c in reduced))

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class MapInstance:
    """One concrete map of a model (map_id may carry a transform suffix)."""

    model_id: str
    map_id: str
    phase: Optional[float] = None
    dimension: int = 2


@dataclass(frozen=True)
class JacobianPair:
    """Derivative D_x f, its cojacobian (D_x f)^-T and the determinant."""

    jac: np.ndarray
    cojac: np.ndarray
    det_jac: float


# ===================================================================
# CONFIGS
# ===================================================================

class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class AffineMapSpec(_StrictModel):
    """One affine torus map x -> A x + b."""
    id: str
    matrix: List[List[float]]
    offset: Optional[List[float]] = None
    weight: Optional[float] = Field(default=None, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_shape(self) -> "AffineMapSpec":
        d = len(self.matrix)
        if d == 0 or any(len(row) != d for row in self.matrix):
            raise ValueError(f"map '{self.id}': matrix must be square and nonempty")
        if self.offset is not None and len(self.offset) != d:
            raise ValueError(f"map '{self.id}': offset has length {len(self.offset)}, expected {d}")
        return self


class AffineTorusConfig(_StrictModel):
    """Random affine maps of T^d with integer unimodular linear parts."""
    variant: Literal["affine-torus"] = "affine-torus"
    maps: List[AffineMapSpec] = Field(min_length=1)

    @field_validator("maps")
    @classmethod
    def check_unimodular(cls, maps: List[AffineMapSpec]) -> List[AffineMapSpec]:
        d = len(maps[0].matrix)
        for spec in maps:
            a = np.asarray(spec.matrix, dtype=float)
            if a.shape != (d, d):
                raise ValueError(f"map '{spec.id}' has dimension {a.shape[0]}, expected {d}")
            if not np.allclose(a, np.rint(a), atol=0.0):
                raise ValueError(f"map '{spec.id}': matrix entries must be integers")
            det = float(np.linalg.det(a))
            if abs(abs(det) - 1.0) > UNIMODULAR_TOLERANCE:
                raise ValueError(f"map '{spec.id}': matrix is not unimodular (det = {det:.6g})")
        ids = [spec.id for spec in maps]
        if len(set(ids)) != len(ids):
            raise ValueError("map ids must be unique")
        return maps


class PierrehumbertConfig(_StrictModel):
    """Alternating random-phase sine shears on T^2."""
    variant: Literal["pierrehumbert"] = "pierrehumbert"
    tau: float = Field(gt=0.0)


class StandardMapConfig(_StrictModel):
    """Randomly kicked standard map f(x, y) = (L psi(x) - y + omega, x)."""
    variant: Literal["standard-map"] = "standard-map"
    kick_strength: float = Field(gt=0.0)
    noise_half_width: float = Field(gt=0.0, le=1.0)
    profile: Literal["sine"] = "sine"


class MatrixSpec(_StrictModel):
    """One matrix of a linear cocycle."""
    id: str
    matrix: List[List[float]]
    weight: Optional[float] = Field(default=None, ge=0.0, le=1.0)


class LinearCocycleConfig(_StrictModel):
    """Matrix cocycle over a one-point base."""
    variant: Literal["linear-cocycle"] = "linear-cocycle"
    matrices: List[MatrixSpec] = Field(min_length=1)

    @field_validator("matrices")
    @classmethod
    def check_invertible(cls, matrices: List[MatrixSpec]) -> List[MatrixSpec]:
        d = len(matrices[0].matrix)
        for spec in matrices:
            a = np.asarray(spec.matrix, dtype=float)
            if a.shape != (d, d) or d == 0:
                raise ValueError(f"matrix '{spec.id}' must be {d}x{d}")
            if abs(np.linalg.det(a)) < 1e-8:
                raise ValueError(f"matrix '{spec.id}' is singular")
        return matrices


class RationalTranslationConfig(_StrictModel):
    """Uniform law on translations by (j_1/Q, ..., j_d/Q)."""
    variant: Literal["rational-translation"] = "rational-translation"
    denominator: int = Field(ge=1)
    dimension: int = Field(default=2, ge=1, le=4)


class FactoringBlockConfig(_StrictModel):
    """T^4 model diag(A, Id) and [[Id, L Id], [0, Id]] (expanding factor, fixed second factor)."""
    variant: Literal["factoring-block"] = "factoring-block"
    base: List[List[float]] = Field(default_factory=lambda: [[2.0, 1.0], [1.0, 1.0]])
    shear: float = 10.0


class CoexpandingBlockConfig(_StrictModel):
    """Cocycle on R^4 from words of length `power` in a base tuple plus a shear."""
    variant: Literal["coexpanding-block"] = "coexpanding-block"
    base: List[List[List[float]]] = Field(
        default_factory=lambda: [[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]], min_length=1
    )
    power: int = Field(default=1, ge=1, le=16)
    shear: float = 10.0


class ProductLiftConfig(_StrictModel):
    """k-point motion of a base model."""
    variant: Literal["product-lift"] = "product-lift"
    base: "BaseModelConfig"
    copies: int = Field(ge=2)


BaseModelConfig = Annotated[
    Union[
        AffineTorusConfig,
        PierrehumbertConfig,
        StandardMapConfig,
        LinearCocycleConfig,
        RationalTranslationConfig,
    ],
    Field(discriminator="variant"),
]

ModelConfig = Annotated[
    Union[
        AffineTorusConfig,
        PierrehumbertConfig,
        StandardMapConfig,
        LinearCocycleConfig,
        RationalTranslationConfig,
        FactoringBlockConfig,
        CoexpandingBlockConfig,
        ProductLiftConfig,
    ],
    Field(discriminator="variant"),
]

ProductLiftConfig.model_rebuild()
