"""
Measure Models

Value types for driving measures, composition words and batches of words.
All types are immutable after construction.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, List, Optional, Tuple

import numpy as np

from pipeline.core.exceptions import ConfigurationError

WEIGHT_TOLERANCE = 1e-12


class MeasureKind(str, Enum):
    """How a driving measure is represented."""
    FINITE = "finite-atoms"
    PARAMETRIC = "parametric-uniform-phase"
    CONVOLUTION = "convolution-of-measures"


class TransformKind(str, Enum):
    """The four bundle maps attached to a random system."""
    IDENTITY = "identity"
    INVERSE = "inverse"
    TRANSPOSE = "transpose"
    INVERSE_TRANSPOSE = "inverse-transpose"


@dataclass(frozen=True)
class MapAtom:
    """One map of a model's table with its probability and optional phase."""

    map_id: str
    """Identifier into the model's map table (may carry a transform suffix like 'S^-1')"""

    weight: float = 1.0
    """Probability in [0, 1]"""

    phase: Optional[float] = None
    """Member of a one-parameter family; None for maps without a phase"""

    def __post_init__(self):
        if not (0.0 <= self.weight <= 1.0):
            raise ConfigurationError(f"Atom '{self.map_id}' has weight {self.weight} outside [0, 1]")


@dataclass(frozen=True)
class DrivingMeasure:
    """
    Probability law on maps.

    finite-atoms: ``atoms`` with weights summing to 1.
    parametric-uniform-phase: the family ``family`` with phase uniform on [0, phase_period).
    convolution-of-measures: ``factors``; a sample applies factor 0's sample first.
    """

    kind: MeasureKind
    atoms: Tuple[MapAtom, ...] = ()
    phase_period: Optional[float] = None
    family: Optional[str] = None
    factors: Tuple["DrivingMeasure", ...] = ()

    def __post_init__(self):
        if self.kind == MeasureKind.FINITE:
            if not self.atoms:
                raise ConfigurationError("Finite measure needs at least one atom", key="measure.atoms")
            total = sum(atom.weight for atom in self.atoms)
            if abs(total - 1.0) > WEIGHT_TOLERANCE:
                raise ConfigurationError(
                    f"Atom weights sum to {total!r}, expected 1 within {WEIGHT_TOLERANCE}",
                    key="measure.atoms",
                )
        elif self.kind == MeasureKind.PARAMETRIC:
            if not self.family:
                raise ConfigurationError("Parametric measure needs a family map_id", key="measure.family")
            if self.phase_period is None or self.phase_period <= 0:
                raise ConfigurationError("Parametric measure needs a positive phase_period", key="measure.phase_period")
        elif self.kind == MeasureKind.CONVOLUTION:
            if not self.factors:
                raise ConfigurationError("Convolution needs at least one factor", key="measure.factors")

    @property
    def weights(self) -> np.ndarray:
        """Atom weights as an array (finite kind)."""
        return np.array([atom.weight for atom in self.atoms], dtype=float)

    def slots(self) -> Tuple["DrivingMeasure", ...]:
        """
        Leaf measures sampled for one step, in application order.

        A finite or parametric measure is its own single slot; a convolution
        flattens its factors.
        """
        if self.kind != MeasureKind.CONVOLUTION:
            return (self,)
        out: List[DrivingMeasure] = []
        for factor in self.factors:
            out.extend(factor.slots())
        return tuple(out)

    def map_ids(self) -> Tuple[str, ...]:
        """All map ids referenced by this measure."""
        ids: List[str] = []
        for slot in self.slots():
            if slot.kind == MeasureKind.FINITE:
                ids.extend(atom.map_id for atom in slot.atoms)
            else:
                ids.append(slot.family)
        return tuple(dict.fromkeys(ids))

    @classmethod
    def finite(cls, atoms: List[Tuple[str, float]] | List[MapAtom]) -> "DrivingMeasure":
        """Build a finite measure from (map_id, weight) pairs or atoms."""
        built = tuple(a if isinstance(a, MapAtom) else MapAtom(map_id=a[0], weight=float(a[1])) for a in atoms)
        return cls(kind=MeasureKind.FINITE, atoms=built)

    @classmethod
    def uniform(cls, map_ids: List[str]) -> "DrivingMeasure":
        """Uniform finite measure on the given map ids (last weight absorbs rounding)."""
        m = len(map_ids)
        weights = [1.0 / m] * m
        weights[-1] = 1.0 - sum(weights[:-1])
        return cls.finite(list(zip(map_ids, weights)))

    @classmethod
    def dirac(cls, map_id: str) -> "DrivingMeasure":
        """Point mass on one map."""
        return cls.finite([(map_id, 1.0)])


@dataclass(frozen=True)
class Word:
    """
    A composition word. letters[0] is applied first.

    For convolution measures every step contributes one letter per factor, so
    ``len(letters) == steps * len(measure.slots())``.
    """

    letters: Tuple[MapAtom, ...]
    weight: float
    steps: int

    def __post_init__(self):
        if self.steps < 1 or not self.letters:
            raise ConfigurationError("A word has at least one step")


@dataclass(frozen=True)
class LetterColumn:
    """
    One letter position across a batch of words.

    Finite slots store atom indices, parametric slots store phases.
    """

    slot: DrivingMeasure
    indices: Optional[np.ndarray] = None
    phases: Optional[np.ndarray] = None

    def groups(self) -> Iterator[Tuple[str, Optional[np.ndarray], Optional[np.ndarray | float]]]:
        """
        Yield (map_id, mask, phase) groups covering the batch.

        mask is None when the group covers every word; phase is an array for
        parametric slots and the atom's fixed phase (or None) for finite slots.
        """
        if self.slot.kind == MeasureKind.PARAMETRIC:
            yield self.slot.family, None, self.phases
            return
        present = np.unique(self.indices)
        if present.size == 1:
            atom = self.slot.atoms[int(present[0])]
            yield atom.map_id, None, atom.phase
            return
        for j in present:
            atom = self.slot.atoms[int(j)]
            yield atom.map_id, self.indices == j, atom.phase


@dataclass(frozen=True)
class WordBatch:
    """A batch of words of equal length in column form, with per-word weights."""

    columns: Tuple[LetterColumn, ...]
    weights: np.ndarray
    steps: int
    exact: bool
    """True when the batch is the full enumeration with exact product weights"""

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def slots_per_step(self) -> int:
        return len(self.columns) // self.steps

    def take(self, start: int, stop: int) -> "WordBatch":
        """Sub-batch of words ``start:stop`` (weights kept as they are)."""
        columns = tuple(
            LetterColumn(
                slot=c.slot,
                indices=None if c.indices is None else c.indices[start:stop],
                phases=None if c.phases is None else c.phases[start:stop],
            )
            for c in self.columns
        )
        return WordBatch(columns=columns, weights=self.weights[start:stop], steps=self.steps, exact=self.exact)

    def repeat(self, times: int) -> "WordBatch":
        """Each word repeated ``times`` consecutive times (lanes for vectorized frames)."""
        columns = tuple(
            LetterColumn(
                slot=c.slot,
                indices=None if c.indices is None else np.repeat(c.indices, times),
                phases=None if c.phases is None else np.repeat(c.phases, times),
            )
            for c in self.columns
        )
        return WordBatch(columns=columns, weights=np.repeat(self.weights, times), steps=self.steps, exact=self.exact)

    def word(self, i: int) -> Word:
        """Materialize word ``i`` as a Word value."""
        letters = []
        for column in self.columns:
            if column.slot.kind == MeasureKind.PARAMETRIC:
                letters.append(MapAtom(map_id=column.slot.family, weight=1.0, phase=float(column.phases[i])))
            else:
                letters.append(column.slot.atoms[int(column.indices[i])])
        return Word(letters=tuple(letters), weight=float(self.weights[i]), steps=self.steps)


@dataclass(frozen=True)
class SamplingGrid:
    """Regular lattice on the torus used for grid-max C^2 discrepancies."""

    points_per_axis: int = 64
    dimension: int = 2
    extra_points: Tuple[Tuple[float, ...], ...] = field(default_factory=tuple)

    def points(self) -> np.ndarray:
        """Lattice points (n^d, d) plus any extra points."""
        if self.points_per_axis < 1 and not self.extra_points:
            return np.zeros((0, self.dimension))
        axes = [np.arange(self.points_per_axis) / max(self.points_per_axis, 1)] * self.dimension
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dimension) \
            if self.points_per_axis >= 1 else np.zeros((0, self.dimension))
        if self.extra_points:
            mesh = np.vstack([mesh, np.asarray(self.extra_points, dtype=float)])
        return mesh
