"""
Pydantic schemas for experiment configs.

A config file has top-level keys ``experiment``, ``model``, ``measure``,
``parameters``, ``seed``, ``threads`` and ``budgets``. Every level rejects
unknown keys. ``parameters`` is validated by the model registered for the
experiment in PARAMETER_MODELS.
"""

from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pipeline.cocycle.models import CocycleBudget
from pipeline.maps.models import ModelConfig
from pipeline.measure.main import transform_measure
from pipeline.measure.models import DrivingMeasure, MapAtom, MeasureKind
from pipeline.stats.models import CorrelationMethod, Observable

EXPERIMENTS = (
    "expansion",
    "lyapunov",
    "spectrum",
    "essential-radius",
    "lasota-yorke",
    "stability",
    "correlation",
    "multiple-mixing",
    "clt",
    "berry-esseen",
    "dd-distance",
    "conormal",
    "block-construction",
)

# Experiments that build their own models
SELF_CONTAINED = ("conormal", "block-construction")

CAT_PAIR = [[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ===================================================================
# MEASURES
# ===================================================================

class AtomConfig(_Strict):
    map: str
    weight: float = Field(ge=0.0, le=1.0)
    phase: Optional[float] = None


class FiniteMeasureConfig(_Strict):
    kind: Literal["finite-atoms"] = "finite-atoms"
    atoms: List[AtomConfig] = Field(min_length=1)

    def build(self) -> DrivingMeasure:
        return DrivingMeasure.finite([MapAtom(map_id=a.map, weight=a.weight, phase=a.phase) for a in self.atoms])


class UniformPhaseMeasureConfig(_Strict):
    kind: Literal["parametric-uniform-phase"] = "parametric-uniform-phase"
    family: str
    phase_period: float = Field(default=1.0, gt=0.0)

    def build(self) -> DrivingMeasure:
        return DrivingMeasure(kind=MeasureKind.PARAMETRIC, family=self.family, phase_period=self.phase_period)


class ConvolutionMeasureConfig(_Strict):
    """Factor 0 is applied first."""
    kind: Literal["convolution-of-measures"] = "convolution-of-measures"
    factors: List["MeasureConfig"] = Field(min_length=1)

    def build(self) -> DrivingMeasure:
        return DrivingMeasure(kind=MeasureKind.CONVOLUTION, factors=tuple(f.build() for f in self.factors))


class TransformedMeasureConfig(_Strict):
    """Push a measure through inverse / transpose / inverse-transpose."""
    kind: Literal["transformed"] = "transformed"
    transform: Literal["identity", "inverse", "transpose", "inverse-transpose"]
    of: "MeasureConfig"

    def build(self) -> DrivingMeasure:
        return transform_measure(self.of.build(), self.transform)


MeasureConfig = Annotated[
    Union[FiniteMeasureConfig, UniformPhaseMeasureConfig, ConvolutionMeasureConfig, TransformedMeasureConfig],
    Field(discriminator="kind"),
]

ConvolutionMeasureConfig.model_rebuild()
TransformedMeasureConfig.model_rebuild()


# ===================================================================
# OBSERVABLES
# ===================================================================

class TermConfig(_Strict):
    mode: List[int] = Field(min_length=1)
    re: float = 0.0
    im: float = 0.0


class ObservableConfig(_Strict):
    """Either explicit Fourier ``terms`` or one ``cosine`` / ``sine`` mode."""
    terms: Optional[List[TermConfig]] = None
    cosine: Optional[List[int]] = None
    sine: Optional[List[int]] = None
    amplitude: float = 1.0

    @model_validator(mode="after")
    def exactly_one_form(self) -> "ObservableConfig":
        given = [name for name in ("terms", "cosine", "sine") if getattr(self, name) is not None]
        if len(given) != 1:
            raise ValueError("observable needs exactly one of 'terms', 'cosine', 'sine'")
        return self

    def build(self) -> Observable:
        if self.cosine is not None:
            return Observable.cosine(self.cosine, self.amplitude)
        if self.sine is not None:
            return Observable.sine(self.sine, self.amplitude)
        return Observable(
            np.array([t.mode for t in self.terms], dtype=np.int64),
            np.array([complex(t.re, t.im) * self.amplitude for t in self.terms]),
        )


# ===================================================================
# PER-EXPERIMENT PARAMETERS
# ===================================================================

class ExpansionParameters(_Strict):
    """Infimum search, or a single frame when ``vector`` is given."""
    N: int = Field(ge=1)
    kind: Literal["cotangent", "tangent"] = "cotangent"
    base: Optional[List[float]] = None
    vector: Optional[List[float]] = None
    points_per_axis: Optional[int] = Field(default=None, ge=0)
    directions: Optional[int] = Field(default=None, ge=0)
    refinement_rounds: int = Field(default=3, ge=0)
    coarse_words: int = Field(default=512, ge=2)


class LyapunovParameters(_Strict):
    T: int = Field(ge=1)
    period: int = Field(default=1, ge=1)
    x0: Optional[List[float]] = None
    furstenberg_burn_in: Optional[int] = Field(default=None, ge=0)
    furstenberg_samples: Optional[int] = Field(default=None, ge=2)
    chains: int = Field(default=20, ge=2)


class SpectrumParameters(_Strict):
    K: int = Field(ge=1)
    s: float = 0.0
    k_sweep: Optional[List[int]] = None
    truncation_tolerance: float = Field(default=1e-3, gt=0.0)


class EssentialRadiusParameters(_Strict):
    s: float = Field(gt=0.0, le=1.0)
    r: float = Field(gt=0.0)
    n_max: int = Field(ge=2)
    witnesses: Optional[List[List[int]]] = None


class LasotaYorkeParameters(_Strict):
    s: float = Field(gt=0.0, le=1.0)
    s_bar: float
    n_list: List[int] = Field(min_length=1)
    r: float = Field(default=4.0, gt=0.0)
    eta: Optional[float] = Field(default=None, gt=0.0)
    witnesses: Optional[List[List[int]]] = None


class MemberConfig(_Strict):
    label: str
    measure: MeasureConfig
    parameter: Optional[float] = None


class StabilityParameters(_Strict):
    """Either a pierrehumbert phase-discretization sweep or explicit members."""
    K: int = Field(ge=1)
    s: float = 0.0
    phase_denominators: Optional[List[int]] = None
    members: Optional[List[MemberConfig]] = None

    @model_validator(mode="after")
    def one_family(self) -> "StabilityParameters":
        if (self.phase_denominators is None) == (self.members is None):
            raise ValueError("stability needs exactly one of 'phase_denominators', 'members'")
        return self


class DdDistanceParameters(_Strict):
    measure_tilde: MeasureConfig
    model_tilde: Optional[ModelConfig] = None
    points_per_axis: int = Field(default=64, ge=1)


class CorrelationParameters(_Strict):
    phi: ObservableConfig
    psi: Optional[ObservableConfig] = None
    """Defaults to phi"""
    n_max: int = Field(ge=0)
    method: CorrelationMethod = CorrelationMethod.OPERATOR
    K: Optional[int] = Field(default=None, ge=1)
    fit: bool = True


class MultipleMixingParameters(_Strict):
    phi0: ObservableConfig
    phi1: ObservableConfig
    phi2: ObservableConfig
    lags: List[Tuple[int, int]] = Field(min_length=1)
    method: CorrelationMethod = CorrelationMethod.OPERATOR
    K: Optional[int] = Field(default=None, ge=1)


class CLTParameters(_Strict):
    phi: ObservableConfig
    N: int = Field(ge=1)
    trials: int = Field(ge=1)
    gk_n_max: int = Field(default=200, ge=6)
    K: Optional[int] = Field(default=None, ge=1)
    sigma2_gk: Optional[float] = Field(default=None, ge=0.0)


class BerryEsseenParameters(_Strict):
    phi: ObservableConfig
    N_list: List[int] = Field(min_length=1)
    trials: int = Field(ge=1)
    gk_n_max: int = Field(default=200, ge=6)
    K: Optional[int] = Field(default=None, ge=1)
    sigma2_gk: Optional[float] = Field(default=None, ge=0.0)


class ConormalParameters(_Strict):
    dimensions: List[int] = Field(default_factory=lambda: [2, 3, 4], min_length=1)
    pairs: int = Field(default=10_000, ge=1)
    max_word_length: int = Field(default=5, ge=1)
    generators: int = Field(default=3, ge=1)


class BlockConstructionParameters(_Strict):
    base: List[List[List[float]]] = Field(default_factory=lambda: [m for m in CAT_PAIR], min_length=1)
    max_power: int = Field(default=12, ge=1, le=16)
    epsilon: float = Field(default=0.01, gt=0.0, lt=1.0)
    shear: float = Field(default=10.0, gt=0.0)
    N: int = Field(default=1, ge=1)


PARAMETER_MODELS: Dict[str, type] = {
    "expansion": ExpansionParameters,
    "lyapunov": LyapunovParameters,
    "spectrum": SpectrumParameters,
    "essential-radius": EssentialRadiusParameters,
    "lasota-yorke": LasotaYorkeParameters,
    "stability": StabilityParameters,
    "correlation": CorrelationParameters,
    "multiple-mixing": MultipleMixingParameters,
    "clt": CLTParameters,
    "berry-esseen": BerryEsseenParameters,
    "dd-distance": DdDistanceParameters,
    "conormal": ConormalParameters,
    "block-construction": BlockConstructionParameters,
}


# ===================================================================
# TOP LEVEL
# ===================================================================

class BudgetConfig(_Strict):
    word_cap: Optional[int] = Field(default=None, ge=1)
    mc_samples: Optional[int] = Field(default=None, ge=2)
    block_size: Optional[int] = Field(default=None, ge=1)

    def build(self, seed: int, threads: int) -> CocycleBudget:
        given = self.model_dump(exclude_none=True)
        return CocycleBudget(seed=seed, threads=threads, **given)


class ExperimentConfig(_Strict):
    """One experiment run. ``parameters`` stays a raw table until the loader validates it."""
    experiment: Literal[EXPERIMENTS]
    name: Optional[str] = None
    model: Optional[ModelConfig] = None
    measure: Optional[MeasureConfig] = None
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    threads: Optional[int] = Field(default=None, ge=1)
    budgets: BudgetConfig = Field(default_factory=BudgetConfig)

    @model_validator(mode="after")
    def model_required(self) -> "ExperimentConfig":
        if self.model is None and self.experiment not in SELF_CONTAINED:
            raise ValueError(f"experiment '{self.experiment}' needs a [model] table")
        return self
