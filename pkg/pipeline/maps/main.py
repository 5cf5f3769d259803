"""
Map Zoo Operations

Builds models from their configs, evaluates maps and derivatives at single
points, lifts models to k-point motions, and provides the factories for the
block-matrix and phase-family constructions.
"""

import hashlib
import itertools
import json
from typing import List, Optional, Sequence, Tuple

import logfire
import numpy as np

from config.settings import settings
from pipeline.core.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    DimensionMismatchError,
    InternalConsistencyError,
)
from pipeline.measure.models import DrivingMeasure, MapAtom, MeasureKind

from .models import (
    AffineTorusConfig,
    CoexpandingBlockConfig,
    FactoringBlockConfig,
    JacobianPair,
    LinearCocycleConfig,
    MapInstance,
    PierrehumbertConfig,
    ProductLiftConfig,
    RationalTranslationConfig,
    StandardMapConfig,
    TorusPoint,
)
from .systems import (
    AffineTorusModel,
    LinearCocycleModel,
    PierrehumbertModel,
    ProductLiftModel,
    RandomSystem,
    StandardMapModel,
    uniform_or_weighted,
)

SINGULAR_DETERMINANT = 1e-8

CAT_MAP = np.array([[2.0, 1.0], [1.0, 1.0]])
CAT_MAP_PARTNER = np.array([[1.0, 1.0], [1.0, 2.0]])


def _model_id(config) -> str:
    """Short stable identifier derived from the config contents."""
    payload = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return f"{config.variant}-{hashlib.sha256(payload.encode()).hexdigest()[:12]}"


def build_model(config) -> RandomSystem:
    """
    Register a model from its config.

    Args:
        config: One of the ModelConfig variants (already validated by pydantic)

    Returns:
        Model handle exposing forward/inverse/derivatives and ``default_measure``
    """
    model_id = _model_id(config)

    if isinstance(config, AffineTorusConfig):
        d = len(config.maps[0].matrix)
        model = AffineTorusModel(
            model_id,
            matrices={m.id: np.asarray(m.matrix, dtype=float) for m in config.maps},
            offsets={m.id: np.asarray(m.offset if m.offset is not None else np.zeros(d), dtype=float)
                     for m in config.maps},
            default_measure=uniform_or_weighted([m.id for m in config.maps], [m.weight for m in config.maps]),
        )
    elif isinstance(config, PierrehumbertConfig):
        model = PierrehumbertModel(model_id, config.tau)
    elif isinstance(config, StandardMapConfig):
        model = StandardMapModel(model_id, config.kick_strength, config.noise_half_width)
    elif isinstance(config, LinearCocycleConfig):
        model = LinearCocycleModel(
            model_id,
            matrices={m.id: np.asarray(m.matrix, dtype=float) for m in config.matrices},
            default_measure=uniform_or_weighted([m.id for m in config.matrices], [m.weight for m in config.matrices]),
        )
    elif isinstance(config, RationalTranslationConfig):
        model = rational_translation_model(config.denominator, config.dimension)
    elif isinstance(config, FactoringBlockConfig):
        model = factoring_block_model(np.asarray(config.base, dtype=float), config.shear)
    elif isinstance(config, CoexpandingBlockConfig):
        model = coexpanding_block_model([np.asarray(m, dtype=float) for m in config.base], config.power, config.shear)
    elif isinstance(config, ProductLiftConfig):
        model = lift_product(build_model(config.base), config.copies)
    else:
        raise ConfigurationError(f"Unknown model variant: {getattr(config, 'variant', config)!r}", key="model.variant")

    logfire.info(
        "Model built",
        model_id=model.model_id,
        variant=model.variant,
        state_dimension=model.state_dimension,
        maps=len(model.base_ids),
    )
    return model


def lift_product(model: RandomSystem, k: int) -> ProductLiftModel:
    """
    k-fold product model applying the same sampled map to every component.

    Raises:
        ConfigurationError: k < 2
        BudgetExceededError: k * d above ``settings.max_product_dimension``
    """
    if k < 2:
        raise ConfigurationError(f"Product lift needs k >= 2, got {k}", key="model.copies")
    dimension = k * model.fiber_dimension
    if dimension > settings.max_product_dimension:
        raise BudgetExceededError("product dimension k*d", dimension, settings.max_product_dimension)
    return ProductLiftModel(model, k)


# ===================================================================
# POINTWISE EVALUATION
# ===================================================================

def _check_instance(model: RandomSystem, f: MapInstance, x: TorusPoint) -> None:
    if f.model_id != model.model_id:
        raise ConfigurationError(f"Map '{f.map_id}' belongs to model '{f.model_id}', not '{model.model_id}'")
    if x.dimension != model.state_dimension:
        raise DimensionMismatchError(
            f"Point has dimension {x.dimension}, model '{model.model_id}' expects {model.state_dimension}"
        )


def map_instance(model: RandomSystem, map_id: str, phase: Optional[float] = None) -> MapInstance:
    """Convenience constructor bound to ``model``."""
    model.resolve(map_id)
    return MapInstance(model_id=model.model_id, map_id=map_id, phase=phase, dimension=model.state_dimension)


def apply(model: RandomSystem, f: MapInstance, x: TorusPoint) -> TorusPoint:
    """Return f(x) reduced to [0, 1)^d."""
    _check_instance(model, f, x)
    out = model.forward(f.map_id, x.as_array().reshape(1, -1), f.phase)
    return TorusPoint(tuple(out[0]))


def jacobian_pair(model: RandomSystem, f: MapInstance, x: TorusPoint) -> JacobianPair:
    """
    Analytic derivative of f at x with its cojacobian (D_x f)^-T.

    Raises:
        InternalConsistencyError: |det D_x f| < 1e-8
    """
    _check_instance(model, f, x)
    jac = model.jacobian(f.map_id, x.as_array().reshape(1, -1), f.phase)[0]
    det = float(np.linalg.det(jac))
    if abs(det) < SINGULAR_DETERMINANT:
        raise InternalConsistencyError(f"Singular jacobian for '{f.map_id}' at {x.coords} (det = {det:.3g})")
    return JacobianPair(jac=jac, cojac=np.linalg.inv(jac).T, det_jac=det)


# ===================================================================
# FACTORIES
# ===================================================================

def _block(top_left: np.ndarray, top_right: np.ndarray, bottom_left: np.ndarray, bottom_right: np.ndarray) -> np.ndarray:
    return np.block([[top_left, top_right], [bottom_left, bottom_right]])


def rational_translation_model(denominator: int, dimension: int = 2) -> AffineTorusModel:
    """Uniform law on the translations by (j_1/Q, ..., j_d/Q), 0 <= j_i < Q."""
    if denominator < 1:
        raise ConfigurationError("Denominator must be >= 1", key="model.denominator")
    identity = np.eye(dimension)
    matrices, offsets = {}, {}
    for js in itertools.product(range(denominator), repeat=dimension):
        map_id = "t_" + "_".join(str(j) for j in js)
        matrices[map_id] = identity
        offsets[map_id] = np.asarray(js, dtype=float) / denominator
    return AffineTorusModel(
        f"rational-translation-Q{denominator}-d{dimension}",
        matrices,
        offsets,
        DrivingMeasure.uniform(list(matrices)),
    )


def factoring_block_model(base: np.ndarray = CAT_MAP, shear: float = 10.0) -> AffineTorusModel:
    """
    T^4 model generated by diag(A, Id) and [[Id, L Id], [0, Id]].

    Every mode (0, k_2) is fixed by both maps, so the averaged operator is
    not ergodic although the first factor expands.
    """
    a = np.asarray(base, dtype=float)
    d = a.shape[0]
    eye, zero = np.eye(d), np.zeros((d, d))
    matrices = {
        "D": _block(a, zero, zero, eye),
        "U": _block(eye, shear * eye, zero, eye),
    }
    return AffineTorusModel(
        f"factoring-block-L{shear:g}",
        matrices,
        {k: np.zeros(2 * d) for k in matrices},
        DrivingMeasure.uniform(list(matrices)),
    )


def word_matrices(matrices: Sequence[np.ndarray], power: int) -> List[Tuple[str, np.ndarray]]:
    """All products M_{w_{p-1}} ... M_{w_0} over words of length ``power``, first letter applied first."""
    out = []
    for word in itertools.product(range(len(matrices)), repeat=power):
        product = np.eye(matrices[0].shape[0])
        for j in word:
            product = np.asarray(matrices[j]) @ product
        out.append(("w" + "".join(str(j) for j in word), product))
    return out


def coexpanding_block_model(
    base: Sequence[np.ndarray] = (CAT_MAP, CAT_MAP_PARTNER),
    power: int = 1,
    shear: float = 10.0,
) -> LinearCocycleModel:
    """
    Linear cocycle on R^4 that is coexpanding but not expanding on average.

    Atoms: diag(W, Id) for every word W of length ``power`` in the base tuple,
    each with weight 1/2 * m^-power, and the shear [[Id, 0], [L Id, Id]] with
    weight 1/2.
    """
    words = word_matrices([np.asarray(m, dtype=float) for m in base], power)
    d = words[0][1].shape[0]
    eye, zero = np.eye(d), np.zeros((d, d))
    matrices = {name: _block(w, zero, zero, eye) for name, w in words}
    matrices["shear"] = _block(eye, zero, shear * eye, eye)
    weight = 0.5 / len(words)
    atoms = [MapAtom(map_id=name, weight=weight) for name, _ in words]
    atoms.append(MapAtom(map_id="shear", weight=1.0 - weight * len(words)))
    return LinearCocycleModel(
        f"coexpanding-block-p{power}-L{shear:g}",
        matrices,
        DrivingMeasure.finite(atoms),
    )


def pierrehumbert_phase_family(tau: float, denominator: int) -> Tuple[PierrehumbertModel, DrivingMeasure]:
    """
    Pierrehumbert model with phases discretized to t = j/Q.

    Returns the model and the convolution of two uniform finite measures on
    the phases {j/Q}, vertical factor first.
    """
    if denominator < 1:
        raise ConfigurationError("Denominator must be >= 1", key="phase_denominators")
    model = build_model(PierrehumbertConfig(tau=tau))

    def factor(family: str) -> DrivingMeasure:
        weights = [1.0 / denominator] * denominator
        weights[-1] = 1.0 - sum(weights[:-1])
        return DrivingMeasure(
            kind=MeasureKind.FINITE,
            atoms=tuple(MapAtom(map_id=family, weight=w, phase=j / denominator) for j, w in enumerate(weights)),
        )

    measure = DrivingMeasure(
        kind=MeasureKind.CONVOLUTION,
        factors=(factor(PierrehumbertModel.VERTICAL), factor(PierrehumbertModel.HORIZONTAL)),
    )
    return model, measure
