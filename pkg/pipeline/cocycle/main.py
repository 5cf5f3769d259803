"""
Cocycle Estimators

Expansion-on-average integrals for tangent vectors, covectors and k-planes,
the infimum search over frames, Lyapunov spectra and Furstenberg integrals.
All rates are reported per step.
"""

import math
from typing import Optional, Tuple

import logfire
import numpy as np
from scipy import stats
from scipy.stats import qmc

from pipeline.core.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    InternalConsistencyError,
    UnsupportedMeasureError,
    UnsupportedModelError,
)
from pipeline.core.streams import make_stream, map_blocks, ordered_concat
from pipeline.measure.main import enumerate_batch, sample_batch
from pipeline.measure.models import DrivingMeasure, LetterColumn, MapAtom, Word, WordBatch

from .models import (
    CocycleBudget,
    CotangentFrame,
    EstimateMode,
    ExpansionEstimate,
    FrameKind,
    FurstenbergEstimate,
    LyapunovReport,
    PlaneFrame,
    SearchPlan,
)
from .utils import (
    batch_means,
    check_fiber,
    direction_values,
    lane_values,
    push_frames,
    require_finite,
)

CONORMAL_TOLERANCE = 1e-10
COARSE_STREAM = 1 << 32
LYAPUNOV_BATCHES = 20
MAX_MOVES_PER_ROUND = 64


# ===================================================================
# SINGLE-FRAME ESTIMATES
# ===================================================================

def _estimate(
    model,
    mu: DrivingMeasure,
    N: int,
    base: np.ndarray,
    frame: np.ndarray,
    kind: FrameKind,
    budget: Optional[CocycleBudget],
    witness: Optional[dict] = None,
) -> ExpansionEstimate:
    """Exact enumeration when m^N fits the word cap, Monte Carlo otherwise."""
    if N < 1:
        raise ConfigurationError(f"N must be >= 1, got {N}", key="N")
    budget = budget or CocycleBudget()
    base = np.asarray(base, dtype=float).reshape(-1)
    fell_back = False

    try:
        batch = enumerate_batch(mu, N, budget.word_cap)
    except UnsupportedMeasureError:
        batch = None
    except BudgetExceededError as exc:
        logfire.warning("Exact enumeration over budget, using Monte Carlo", requested=exc.requested, limit=exc.limit)
        batch = None
        fell_back = True

    if batch is not None:
        values = lane_values(model, batch, base, frame, kind)
        return ExpansionEstimate(
            value=float(batch.weights @ values),
            stderr=0.0,
            samples=batch.size,
            mode=EstimateMode.EXACT,
            steps=N,
            witness=witness,
        )

    def run_block(block: range, rng: np.random.Generator) -> np.ndarray:
        return lane_values(model, sample_batch(mu, N, len(block), rng), base, frame, kind)

    values = ordered_concat(map_blocks(run_block, budget.mc_samples, budget.seed, budget.block_size, budget.threads))
    return ExpansionEstimate(
        value=float(values.mean()),
        stderr=float(values.std(ddof=1) / math.sqrt(values.shape[0])),
        samples=int(values.shape[0]),
        mode=EstimateMode.MONTE_CARLO,
        steps=N,
        witness=witness,
        fell_back=fell_back,
    )


def cotangent_expansion(
    model,
    mu: DrivingMeasure,
    N: int,
    frame: CotangentFrame,
    budget: Optional[CocycleBudget] = None,
) -> ExpansionEstimate:
    """
    Estimate  integral of N^-1 ln ||(D_x f)^-T xi|| dmu^N(f).

    The cojacobians are multiplied along the orbit of ``frame.base`` in word
    order (letters[0] first).

    Example:
        >>> cotangent_expansion(cat, DrivingMeasure.dirac("A"), 1, CotangentFrame.at((0, 0), stable)).value
        -0.9624...
    """
    covector = frame.vector
    check_fiber(model, covector, "covector")
    return _estimate(
        model, mu, N, np.asarray(frame.base), covector[:, None], FrameKind.COTANGENT, budget,
        witness={"base": list(frame.base), "covector": list(frame.covector)},
    )


def tangent_expansion(
    model,
    mu: DrivingMeasure,
    N: int,
    base,
    vector,
    budget: Optional[CocycleBudget] = None,
) -> ExpansionEstimate:
    """Estimate  integral of N^-1 ln ||D_x f v|| dmu^N(f)  for a unit vector v."""
    v = np.asarray(vector, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ConfigurationError("Zero tangent vector", key="frame.vector")
    v = v / norm
    check_fiber(model, v, "vector")
    return _estimate(
        model, mu, N, np.asarray(base, dtype=float), v[:, None], FrameKind.TANGENT, budget,
        witness={"base": list(np.asarray(base, dtype=float).reshape(-1)), "vector": v.tolist()},
    )


def kplane_expansion(
    model,
    mu: DrivingMeasure,
    N: int,
    plane: PlaneFrame,
    budget: Optional[CocycleBudget] = None,
) -> ExpansionEstimate:
    """
    Estimate the covolume growth rate of a k-plane.

    The frame is re-orthonormalized every step; the per-step factor is the
    Gram-determinant ratio (1/2) ln det(G^T G) of the pushed frame.
    """
    basis = plane.matrix
    check_fiber(model, basis, "plane")
    return _estimate(
        model, mu, N, np.asarray(plane.base), basis, FrameKind.TANGENT, budget,
        witness={"base": list(plane.base), "basis": [list(b) for b in plane.basis]},
    )


def _word_batch(word: Word) -> WordBatch:
    columns = tuple(
        LetterColumn(
            slot=DrivingMeasure.dirac(letter.map_id) if letter.phase is None
            else DrivingMeasure.finite([MapAtom(map_id=letter.map_id, weight=1.0, phase=letter.phase)]),
            indices=np.zeros(1, dtype=np.int64),
        )
        for letter in word.letters
    )
    return WordBatch(columns=columns, weights=np.ones(1), steps=word.steps, exact=True)


def conormal_check(model, word: Word, plane: PlaneFrame) -> Tuple[float, float]:
    """
    Covolume growth of a (d-1)-plane and growth of its unit conormal along one word.

    For volume-preserving maps the two coincide; a disagreement beyond a
    relative 1e-10 raises InternalConsistencyError.

    Returns:
        (covolume_growth, conormal_growth)
    """
    if not model.volume_preserving:
        raise UnsupportedModelError(f"Conormal identity needs a volume-preserving model ('{model.variant}')")
    basis = plane.matrix
    d = model.fiber_dimension
    if basis.shape[0] != d or plane.k != d - 1:
        raise ConfigurationError(f"Conormal check needs a {d - 1}-plane in dimension {d}", key="frame.basis")

    q, _ = np.linalg.qr(basis, mode="complete")
    conormal = q[:, -1]
    batch = _word_batch(word)
    base = np.asarray(plane.base, dtype=float).reshape(1, -1)

    covolume = math.exp(push_frames(model, batch, base, basis[None], FrameKind.TANGENT)[0])
    conormal_growth = math.exp(push_frames(model, batch, base, conormal[None, :, None], FrameKind.COTANGENT)[0])

    if abs(covolume - conormal_growth) > CONORMAL_TOLERANCE * max(covolume, conormal_growth):
        raise InternalConsistencyError(
            f"Covolume growth {covolume!r} and conormal growth {conormal_growth!r} disagree"
        )
    return covolume, conormal_growth


# ===================================================================
# INFIMUM SEARCH
# ===================================================================

def base_lattice(model, plan: SearchPlan) -> np.ndarray:
    """Search points: one point for constant-derivative models, else a regular lattice."""
    d = model.state_dimension
    if model.constant_derivative or d == 0:
        return np.zeros((1, d))
    if plan.points_per_axis is not None:
        n = plan.points_per_axis
    elif d <= 2:
        n = 16
    elif d <= 4:
        n = 8
    else:
        n = 3
    if n == 0:
        return np.zeros((0, d))
    axes = [np.arange(n) / n] * d
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def sphere_design(dimension: int, count: Optional[int] = None) -> Tuple[np.ndarray, float]:
    """
    Unit directions covering the projective sphere, with their typical spacing.

    d = 2 uses evenly spaced angles on [0, pi); d >= 3 maps an unscrambled
    Halton sequence to the sphere through the normal quantile function.
    """
    if dimension == 1:
        return np.ones((1, 1)), 0.0
    if dimension == 2:
        count = 64 if count is None else count
        if count == 0:
            return np.zeros((0, 2)), 0.0
        theta = np.pi * np.arange(count) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=1), np.pi / count
    count = 256 if count is None else count
    if count == 0:
        return np.zeros((0, dimension)), 0.0
    # The first Halton point is the origin of the cube, which has no quantile
    cube = qmc.Halton(d=dimension, scramble=False).random(count + 1)[1:]
    gaussian = stats.norm.ppf(cube)
    directions = gaussian / np.linalg.norm(gaussian, axis=1, keepdims=True)
    return directions, np.pi / count ** (1.0 / (dimension - 1))


def _tangent_basis(v: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(v[:, None], mode="complete")
    return q[:, 1:].T


def _refine(model, batch: WordBatch, base: np.ndarray, direction: np.ndarray, value: float,
            kind: FrameKind, rounds: int, step: float) -> Tuple[np.ndarray, float]:
    """Coordinate descent on the sphere: move while a +-step rotation improves, then halve the step."""
    if direction.shape[0] < 2 or step <= 0.0:
        return direction, value
    for _ in range(rounds):
        for _ in range(MAX_MOVES_PER_ROUND):
            tangents = _tangent_basis(direction)
            candidates = np.concatenate([
                np.cos(step) * direction + np.sin(step) * tangents,
                np.cos(step) * direction - np.sin(step) * tangents,
            ])
            values = direction_values(model, batch, base, candidates, kind)
            best = int(np.argmin(values))
            if values[best] >= value:
                break
            direction, value = candidates[best] / np.linalg.norm(candidates[best]), float(values[best])
        step /= 2.0
    return direction, value


def expansion_lambda(
    model,
    mu: DrivingMeasure,
    N: int,
    plan: Optional[SearchPlan] = None,
    budget: Optional[CocycleBudget] = None,
    kind: FrameKind | str = FrameKind.COTANGENT,
) -> ExpansionEstimate:
    """
    Infimum of the expansion estimate over base points and unit (co)vectors.

    A coarse pass evaluates every lattice point and sphere direction on one
    common word set, coordinate descent refines the worst direction, and the
    witness is re-estimated with the full budget.

    Raises:
        ConfigurationError: empty search plan
    """
    kind = FrameKind(kind)
    plan = plan or SearchPlan()
    budget = budget or CocycleBudget()
    if N < 1:
        raise ConfigurationError(f"N must be >= 1, got {N}", key="N")

    points = base_lattice(model, plan)
    directions, spacing = sphere_design(model.fiber_dimension, plan.directions)
    if points.shape[0] == 0 or directions.shape[0] == 0:
        raise ConfigurationError("Empty search plan", key="search")

    with logfire.span(
        "cocycle.expansion_lambda",
        kind=kind.value,
        N=N,
        points=int(points.shape[0]),
        directions=int(directions.shape[0]),
    ):
        try:
            coarse = enumerate_batch(mu, N, plan.coarse_words)
        except (BudgetExceededError, UnsupportedMeasureError):
            coarse = sample_batch(mu, N, plan.coarse_words, make_stream(budget.seed, COARSE_STREAM))

        best_value, best_point, best_direction = math.inf, points[0], directions[0]
        for point in points:
            values = direction_values(model, coarse, point, directions, kind)
            j = int(np.argmin(values))
            if values[j] < best_value:
                best_value, best_point, best_direction = float(values[j]), point, directions[j]

        refined_direction, refined_value = _refine(
            model, coarse, best_point, best_direction, best_value, kind, plan.refinement_rounds, spacing / 2.0
        )
        logfire.info(
            "Infimum search finished",
            coarse_value=best_value,
            refined_value=refined_value,
            base=best_point.tolist(),
        )

        label = "covector" if kind == FrameKind.COTANGENT else "vector"
        witness = {
            "base": best_point.tolist(),
            label: refined_direction.tolist(),
            "coarse_value": best_value,
            "refined_value": refined_value,
        }
        return _estimate(model, mu, N, best_point, refined_direction[:, None], kind, budget, witness=witness)


# ===================================================================
# LYAPUNOV SPECTRUM
# ===================================================================

class _BlowUp(Exception):
    pass


def _benettin(model, mu: DrivingMeasure, T: int, x0: np.ndarray, seed: int, period: int, block: int) -> np.ndarray:
    """Per-step log stretch factors (T, F) from QR re-orthonormalization every ``period`` steps."""
    rng = make_stream(seed, 0)
    F = model.fiber_dimension
    logs = np.zeros((T, F))
    frame = np.eye(F)
    x = np.asarray(x0, dtype=float).reshape(1, model.state_dimension)
    cache = {}
    origin = np.zeros((1, model.state_dimension))
    t = 0

    while t < T:
        steps = min(block, T - t)
        batch = sample_batch(mu, steps, 1, rng)
        per_step = batch.slots_per_step
        for s in range(steps):
            for column in batch.columns[s * per_step:(s + 1) * per_step]:
                map_id, _, phase = next(column.groups())
                if model.constant_derivative:
                    key = (map_id, phase)
                    if key not in cache:
                        cache[key] = model.jacobian(map_id, origin, phase)[0]
                    frame = cache[key] @ frame
                else:
                    frame = model.jacobian(map_id, x, phase)[0] @ frame
                    x = model.forward(map_id, x, phase)
            if (t + 1) % period == 0 or t == T - 1:
                q, r = np.linalg.qr(frame)
                stretch = np.abs(np.diag(r))
                if not np.all(np.isfinite(stretch)) or np.any(stretch == 0.0):
                    raise _BlowUp(t)
                logs[t] = np.log(stretch)
                frame = q
            t += 1
    return logs


def lyapunov_spectrum(
    model,
    mu: DrivingMeasure,
    T: int,
    x0=None,
    seed: int = 0,
    period: int = 1,
    block: int = 4096,
) -> LyapunovReport:
    """
    Lyapunov exponents by the QR (Benettin) scheme along one random orbit.

    Confidence half-widths come from 20 batch means with a Student-t quantile.
    A numerical blow-up shortens the re-orthonormalization period and retries
    once.
    """
    if T < 1000:
        raise ConfigurationError(f"Orbit length must be >= 1000, got {T}", key="T")
    if period < 1:
        raise ConfigurationError("Re-orthonormalization period must be >= 1", key="period")
    x0 = np.zeros(model.state_dimension) if x0 is None else np.asarray(x0, dtype=float)

    retried = False
    with logfire.span("cocycle.lyapunov_spectrum", T=T, period=period, seed=seed):
        try:
            logs = _benettin(model, mu, T, x0, seed, period, block)
        except _BlowUp as exc:
            if period == 1:
                raise InternalConsistencyError(f"Lyapunov frame degenerated at step {exc.args[0]}") from exc
            period = max(1, period // 2)
            retried = True
            logfire.warning("Lyapunov frame blow-up, retrying with a shorter period", period=period)
            try:
                logs = _benettin(model, mu, T, x0, seed, period, block)
            except _BlowUp as again:
                raise InternalConsistencyError(f"Lyapunov frame degenerated at step {again.args[0]}") from again

        means = batch_means(logs, LYAPUNOV_BATCHES)
        exponents = means.mean(axis=0)
        half_width = stats.t.ppf(0.975, LYAPUNOV_BATCHES - 1) * means.std(axis=0, ddof=1) / math.sqrt(LYAPUNOV_BATCHES)
        order = np.argsort(-exponents)

        report = LyapunovReport(
            exponents=exponents[order].tolist(),
            orbit_length=T,
            reorthonormalization_period=period,
            confidence=half_width[order].tolist(),
            retried=retried,
        )
        logfire.info("Lyapunov spectrum computed", exponents=report.exponents)
        return report


# ===================================================================
# FURSTENBERG INTEGRAL
# ===================================================================

def furstenberg_integral(
    model,
    mu: DrivingMeasure,
    burn_in: int,
    samples: int,
    seed: int = 0,
    start=None,
    chains: int = 20,
) -> FurstenbergEstimate:
    """
    Average one-step log growth ln ||F v|| against the empirical stationary law on directions.

    Independent projective chains run after ``burn_in`` steps; their means
    give the value and its standard error.

    Args:
        model: Linear or affine model (constant fiber derivative)
        mu: Finite measure (convolutions of finite measures allowed)
        burn_in: Steps discarded per chain
        samples: Total recorded steps across chains
        seed: Root seed
        start: Optional initial direction shared by all chains
        chains: Number of independent chains (>= 2)
    """
    if not model.constant_derivative:
        raise UnsupportedModelError(f"Furstenberg integral needs a linear fiber action ('{model.variant}')")
    require_finite(mu, "Furstenberg integral")
    if chains < 2 or samples < chains:
        raise ConfigurationError("Need at least two chains and one sample per chain", key="samples")

    F = model.fiber_dimension
    origin = np.zeros((1, model.state_dimension))
    slots = mu.slots()
    stacks = [
        np.stack([model.jacobian(a.map_id, origin, a.phase)[0] for a in slot.atoms]) for slot in slots
    ]
    rng = make_stream(seed, 0)
    per_chain = -(-samples // chains)

    if start is None:
        v = rng.standard_normal((chains, F))
    else:
        v = np.broadcast_to(np.asarray(start, dtype=float), (chains, F)).copy()
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    growth = np.zeros(chains)

    with logfire.span("cocycle.furstenberg_integral", burn_in=burn_in, samples=samples, chains=chains):
        for step in range(burn_in + per_chain):
            step_log = np.zeros(chains)
            for slot, stack in zip(slots, stacks):
                idx = rng.choice(len(slot.atoms), size=chains, p=slot.weights)
                w = np.einsum("cij,cj->ci", stack[idx], v)
                norms = np.linalg.norm(w, axis=1)
                step_log += np.log(norms)
                v = w / norms[:, None]
            if step >= burn_in:
                growth += step_log

        chain_means = growth / per_chain
        return FurstenbergEstimate(
            value=float(chain_means.mean()),
            stderr=float(chain_means.std(ddof=1) / math.sqrt(chains)),
            samples=per_chain * chains,
            chains=chains,
        )
