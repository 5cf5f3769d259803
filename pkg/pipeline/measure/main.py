"""Driving-measure operations: word sampling and enumeration, transforms, and the dd distance."""

from dataclasses import replace
from typing import List

import logfire
import numpy as np
from scipy.optimize import linprog

from pipeline.core.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    DimensionMismatchError,
    InternalConsistencyError,
    UnsupportedMeasureError,
    UnsupportedTransformError,
)
from pipeline.core.streams import make_stream

from .models import (
    DrivingMeasure,
    LetterColumn,
    MapAtom,
    MeasureKind,
    SamplingGrid,
    TransformKind,
    Word,
    WordBatch,
)
from .utils import involves_transpose, reverses_order, transform_map_id

MAX_DD_ATOMS = 64


# ===================================================================
# SAMPLING
# ===================================================================

def sample_batch(measure: DrivingMeasure, n: int, count: int, rng: np.random.Generator) -> WordBatch:
    """
    Draw ``count`` i.i.d. words of ``n`` steps in column form.

    Columns are drawn step by step and slot by slot, so the draw order is fixed
    by (measure, n, count) and the generator state.
    """
    if n < 1:
        raise ConfigurationError(f"Word length must be >= 1, got {n}")
    columns: List[LetterColumn] = []
    slots = measure.slots()
    for _ in range(n):
        for slot in slots:
            if slot.kind == MeasureKind.FINITE:
                if len(slot.atoms) == 1:
                    idx = np.zeros(count, dtype=np.int64)
                else:
                    idx = rng.choice(len(slot.atoms), size=count, p=slot.weights)
                columns.append(LetterColumn(slot=slot, indices=idx))
            else:
                columns.append(LetterColumn(slot=slot, phases=rng.uniform(0.0, slot.phase_period, size=count)))
    weights = np.full(count, 1.0 / count) if count > 0 else np.zeros(0)
    return WordBatch(columns=tuple(columns), weights=weights, steps=n, exact=False)


def sample_word(measure: DrivingMeasure, n: int, seed: int) -> Word:
    """
    Sample one word of ``n`` steps from ``measure``.

    Identical (measure, n, seed) triples return identical words.

    Args:
        measure: Driving measure
        n: Number of steps (>= 1)
        seed: Root seed (64-bit)

    Returns:
        Word whose weight is the product of its finite letters' weights
        (parametric letters contribute a density placeholder of 1)
    """
    batch = sample_batch(measure, n, 1, make_stream(seed, 0))
    word = batch.word(0)
    weight = 1.0
    for column, letter in zip(batch.columns, word.letters):
        if column.slot.kind == MeasureKind.FINITE:
            weight *= letter.weight
    return replace(word, weight=weight)


# ===================================================================
# ENUMERATION
# ===================================================================

def word_count(measure: DrivingMeasure, n: int) -> int:
    """Number of distinct words of ``n`` steps (finite slots only)."""
    count = 1
    for slot in measure.slots():
        if slot.kind != MeasureKind.FINITE:
            raise UnsupportedMeasureError(
                f"Parametric measure (family '{slot.family}') cannot be enumerated; sample it instead"
            )
        count *= len(slot.atoms) ** n
    return count


def enumerate_batch(measure: DrivingMeasure, n: int, cap: int) -> WordBatch:
    """
    All words of ``n`` steps with exact product weights, in column form.

    Raises:
        UnsupportedMeasureError: a slot is parametric
        BudgetExceededError: m^n > cap
    """
    if n < 1:
        raise ConfigurationError(f"Word length must be >= 1, got {n}")
    total = word_count(measure, n)
    if total > cap:
        raise BudgetExceededError("word enumeration m^n", total, cap)

    slots = measure.slots()
    column_slots = [slot for _ in range(n) for slot in slots]
    shape = tuple(len(slot.atoms) for slot in column_slots)
    digits = np.unravel_index(np.arange(total, dtype=np.int64), shape)

    weights = np.ones(total)
    columns = []
    for slot, idx in zip(column_slots, digits):
        idx = np.asarray(idx, dtype=np.int64)
        weights = weights * slot.weights[idx]
        columns.append(LetterColumn(slot=slot, indices=idx))
    return WordBatch(columns=tuple(columns), weights=weights, steps=n, exact=True)


def enumerate_words(measure: DrivingMeasure, n: int, cap: int) -> List[Word]:
    """
    Enumerate all m^n words of a finite measure with exact product weights.

    Example:
        >>> words = enumerate_words(DrivingMeasure.uniform(["f", "g"]), 2, cap=10**6)
        >>> [w.weight for w in words]
        [0.25, 0.25, 0.25, 0.25]
    """
    batch = enumerate_batch(measure, n, cap)
    return [batch.word(i) for i in range(batch.size)]


# ===================================================================
# TRANSFORMS
# ===================================================================

def transform_measure(
    measure: DrivingMeasure,
    kind: TransformKind | str,
    model=None,
) -> DrivingMeasure:
    """
    Push a measure through one of the four bundle-map transforms.

    Atoms keep their weights and point at the transformed maps. Inverse and
    transpose reverse the factor order of a convolution, since
    (BA)^-1 = A^-1 B^-1 and (BA)^T = A^T B^T; inverse-transpose keeps it,
    since (BA)^-T = B^-T A^-T.

    Args:
        measure: Driving measure
        kind: identity | inverse | transpose | inverse-transpose
        model: Optional model handle used to check that transposes make sense

    Raises:
        UnsupportedTransformError: transpose on a nonlinear model or family
    """
    kind = TransformKind(kind)
    if kind == TransformKind.IDENTITY:
        return measure

    if involves_transpose(kind):
        if model is not None and not model.is_linear:
            raise UnsupportedTransformError(
                f"Transpose requested on nonlinear model '{model.variant}'"
            )
        if any(slot.kind == MeasureKind.PARAMETRIC for slot in measure.slots()):
            raise UnsupportedTransformError("Transpose requested on a nonlinear phase family")

    if measure.kind == MeasureKind.FINITE:
        atoms = tuple(
            MapAtom(map_id=transform_map_id(a.map_id, kind), weight=a.weight, phase=a.phase)
            for a in measure.atoms
        )
        return replace(measure, atoms=atoms)

    if measure.kind == MeasureKind.PARAMETRIC:
        return replace(measure, family=transform_map_id(measure.family, kind))

    factors = tuple(transform_measure(f, kind, model) for f in measure.factors)
    if reverses_order(kind):
        factors = tuple(reversed(factors))
    return replace(measure, factors=factors)


# ===================================================================
# dd DISTANCE
# ===================================================================

def _torus_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-point Euclidean distance on R^d/Z^d."""
    delta = (a - b + 0.5) % 1.0 - 0.5
    return np.linalg.norm(delta, axis=-1)


def c2_discrepancy(model, map_id: str, phase, model_tilde, map_id_tilde: str, phase_tilde, points: np.ndarray) -> float:
    """
    Grid-max C^2 discrepancy between two maps.

    The largest, over grid points, of the value gap (on the torus), the
    Frobenius gap of first derivatives and the Frobenius gap of second
    derivatives.
    """
    values = _torus_gap(model.forward(map_id, points, phase), model_tilde.forward(map_id_tilde, points, phase_tilde))
    first = np.linalg.norm(
        (model.jacobian(map_id, points, phase) - model_tilde.jacobian(map_id_tilde, points, phase_tilde)).reshape(len(points), -1),
        axis=-1,
    )
    second = np.linalg.norm(
        (model.hessian(map_id, points, phase) - model_tilde.hessian(map_id_tilde, points, phase_tilde)).reshape(len(points), -1),
        axis=-1,
    )
    return float(max(values.max(), first.max(), second.max()))


def dd_distance(
    mu: DrivingMeasure,
    mu_tilde: DrivingMeasure,
    grid: SamplingGrid,
    model,
    model_tilde=None,
) -> float:
    """
    Optimal-coupling distance between two finite driving measures.

    Computes min over couplings pi of  sum pi_ij * sqrt(d(f_i, g_j) + d(f_i^-1, g_j^-1)),
    with d the grid-max C^2 discrepancy. The coupling is solved exactly as a
    transportation LP.

    Args:
        mu, mu_tilde: finite measures with at most 64 atoms each
        grid: sampling lattice on the common state space
        model: model whose maps ``mu`` references
        model_tilde: model for ``mu_tilde`` (defaults to ``model``)

    Raises:
        UnsupportedMeasureError: a measure is not finite
        BudgetExceededError: more than 64 atoms
        ConfigurationError: empty grid
    """
    model_tilde = model_tilde or model
    for label, m in (("mu", mu), ("mu_tilde", mu_tilde)):
        if m.kind != MeasureKind.FINITE:
            raise UnsupportedMeasureError(f"dd distance needs finite measures ({label} is {m.kind.value})")
        if len(m.atoms) > MAX_DD_ATOMS:
            raise BudgetExceededError(f"dd atom count ({label})", len(m.atoms), MAX_DD_ATOMS)

    if mu == mu_tilde and model is model_tilde:
        return 0.0

    points = grid.points()
    if points.shape[0] == 0:
        raise ConfigurationError("dd distance grid is empty", key="grid")
    if points.shape[1] != model.state_dimension or model.state_dimension != model_tilde.state_dimension:
        raise DimensionMismatchError(
            f"Grid dimension {points.shape[1]} does not match state dimensions "
            f"{model.state_dimension}/{model_tilde.state_dimension}"
        )

    with logfire.span("measure.dd_distance", atoms=len(mu.atoms), atoms_tilde=len(mu_tilde.atoms), grid_points=len(points)):
        m, k = len(mu.atoms), len(mu_tilde.atoms)
        cost = np.zeros((m, k))
        for i, a in enumerate(mu.atoms):
            for j, b in enumerate(mu_tilde.atoms):
                forward = c2_discrepancy(model, a.map_id, a.phase, model_tilde, b.map_id, b.phase, points)
                backward = c2_discrepancy(
                    model, transform_map_id(a.map_id, TransformKind.INVERSE), a.phase,
                    model_tilde, transform_map_id(b.map_id, TransformKind.INVERSE), b.phase,
                    points,
                )
                cost[i, j] = np.sqrt(forward + backward)

        p, q = mu.weights, mu_tilde.weights
        # A Dirac side forces the coupling
        if m == 1:
            return float(cost[0] @ q)
        if k == 1:
            return float(p @ cost[:, 0])

        rows = np.zeros((m, m * k))
        for i in range(m):
            rows[i, i * k:(i + 1) * k] = 1.0
        cols = np.zeros((k, m * k))
        for j in range(k):
            cols[j, j::k] = 1.0
        # One marginal equation is redundant; dropping it keeps the system full rank
        a_eq = np.vstack([rows, cols[:-1]])
        b_eq = np.concatenate([p, q[:-1]])
        result = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        if not result.success:
            raise InternalConsistencyError(f"Transportation LP failed: {result.message}")
        value = max(float(result.fun), 0.0)
        logfire.info("dd distance computed", value=value)
        return value
