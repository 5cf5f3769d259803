"""
Map Zoo

Volume-preserving random systems on tori and point-base bundles: affine torus
maps, Pierrehumbert shears, the kicked standard map, linear cocycles and their
k-point lifts.
"""

from .main import (
    apply,
    build_model,
    coexpanding_block_model,
    factoring_block_model,
    jacobian_pair,
    lift_product,
    map_instance,
    pierrehumbert_phase_family,
    rational_translation_model,
)
from .models import (
    AffineTorusConfig,
    CoexpandingBlockConfig,
    FactoringBlockConfig,
    JacobianPair,
    LinearCocycleConfig,
    MapInstance,
    ModelConfig,
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
)

__all__ = [
    "AffineTorusConfig",
    "AffineTorusModel",
    "CoexpandingBlockConfig",
    "FactoringBlockConfig",
    "JacobianPair",
    "LinearCocycleConfig",
    "LinearCocycleModel",
    "MapInstance",
    "ModelConfig",
    "PierrehumbertConfig",
    "PierrehumbertModel",
    "ProductLiftConfig",
    "ProductLiftModel",
    "RandomSystem",
    "RationalTranslationConfig",
    "StandardMapConfig",
    "StandardMapModel",
    "TorusPoint",
    "apply",
    "build_model",
    "coexpanding_block_model",
    "factoring_block_model",
    "jacobian_pair",
    "lift_product",
    "map_instance",
    "pierrehumbert_phase_family",
    "rational_translation_model",
]
