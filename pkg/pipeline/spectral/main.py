"""
Spectral Operations

Galerkin truncation of the averaged transfer operator, its spectrum,
high-frequency decay estimates and stability sweeps under perturbation of
the driving measure.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import logfire
import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from config.settings import settings
from pipeline.cocycle.models import CocycleBudget
from pipeline.core.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    LabError,
)
from pipeline.core.streams import make_stream
from pipeline.maps.main import build_model, pierrehumbert_phase_family
from pipeline.maps.models import PierrehumbertConfig
from pipeline.measure.main import dd_distance, sample_batch
from pipeline.measure.models import DrivingMeasure, MeasureKind, SamplingGrid

from .models import (
    EssentialRadiusEstimate,
    FourierOperator,
    LasotaYorkeReport,
    ModeIndex,
    SpectralReport,
    StabilityPoint,
    StabilityReport,
    sobolev_weights,
)
from .utils import (
    affine_slots,
    check_galerkin_model,
    compose_slots,
    default_witnesses,
    is_affine,
    model_hash,
    witness_key,
    push_modes,
    slot_operator,
    tagged_sobolev_norms,
)

UNIT_TIE = 1e-8
PERIPHERAL_TOLERANCE = 1e-6
COVECTOR_SAMPLES = 4096
COVECTOR_STREAM = 3 << 32


# ===================================================================
# OPERATOR
# ===================================================================

def build_galerkin(model, mu: DrivingMeasure, K: int, s: float = 0.0) -> FourierOperator:
    """
    Averaged transfer operator on the box |k|_inf <= K.

    Args:
        model: affine-torus model, product lift of one, or pierrehumbert model
        mu: driving measure (finite atoms, or the pierrehumbert uniform phase families)
        K: box radius
        s: Sobolev index recorded for weighting

    Returns:
        FourierOperator with unweighted entries and per-column truncation loss

    Raises:
        UnsupportedModelError: model has no Galerkin assembly
        BudgetExceededError: box larger than ``settings.max_galerkin_modes``
    """
    check_galerkin_model(model)
    index = ModeIndex(d=model.state_dimension, K=K)
    if index.size > settings.max_galerkin_modes:
        raise BudgetExceededError("galerkin modes (2K+1)^d", index.size, settings.max_galerkin_modes)

    with logfire.span("galerkin.build", model_id=model.model_id, K=K, modes=index.size):
        parts = [slot_operator(model, slot, index) for slot in mu.slots()]
        matrix, loss = compose_slots(parts)
        matrix.eliminate_zeros()
        op = FourierOperator(index=index, matrix=matrix.tocsc(), s=s, truncation_loss=loss, model_hash=model_hash(model, mu))
        logfire.info("Galerkin operator built", nonzeros=int(matrix.nnz), max_truncation_loss=op.max_truncation_loss)
        return op


def _pairs(values: np.ndarray) -> List[tuple]:
    return [(float(v.real), float(v.imag)) for v in values]


def operator_spectrum(op: FourierOperator, s: Optional[float] = None) -> SpectralReport:
    """
    Eigenvalues of the weighted operator, solved per strongly connected block.

    The constant mode is deflated: its block is solved without mode 0 and the
    eigenvalue 1 of the constant is added back once. The multiplicity of 1
    counts every eigenvalue within 1e-8 of 1, the constant included.
    """
    s = op.s if s is None else s
    weighted = op.weighted(s)
    zero = op.index.zero
    diagonal = weighted.diagonal()
    n_blocks, labels = connected_components(weighted != 0, directed=True, connection="strong")

    values = []
    try:
        for block in range(n_blocks):
            members = np.flatnonzero(labels == block)
            members = members[members != zero]
            if members.size == 0:
                continue
            if members.size == 1:
                values.append(diagonal[members].astype(complex))
                continue
            dense = weighted[members][:, members].toarray()
            values.append(scipy.linalg.eigvals(dense))
    except (np.linalg.LinAlgError, ValueError) as e:
        logfire.error("Eigen-solve failed", error=str(e), K=op.K)
        return SpectralReport(K=op.K, s=s, eigenvalues=[], blocks=n_blocks,
                              max_truncation_loss=op.max_truncation_loss, diagnostic=f"eigensolver failed: {e}")

    deflated = np.concatenate(values) if values else np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(deflated)):
        return SpectralReport(K=op.K, s=s, eigenvalues=[], blocks=n_blocks,
                              max_truncation_loss=op.max_truncation_loss, diagnostic="eigensolver returned non-finite values")

    deflated = deflated[np.argsort(-np.abs(deflated), kind="stable")]
    constant = complex(diagonal[zero])
    everything = np.concatenate([[constant], deflated])
    everything = everything[np.argsort(-np.abs(everything), kind="stable")]

    unit = int(np.sum(np.abs(everything - 1.0) <= UNIT_TIE))
    peripheral = int(np.sum(np.abs(np.abs(deflated) - 1.0) <= PERIPHERAL_TOLERANCE))
    report = SpectralReport(
        K=op.K,
        s=s,
        eigenvalues=_pairs(everything),
        subleading_modulus=float(np.abs(deflated[0])) if deflated.size else None,
        subleading_eigenvalue=_pairs(deflated[:1])[0] if deflated.size else None,
        unit_multiplicity=unit,
        peripheral_count=peripheral,
        weak_mixing_violation=peripheral > 0,
        blocks=n_blocks,
        max_truncation_loss=op.max_truncation_loss,
    )
    if report.weak_mixing_violation:
        logfire.warning("Peripheral non-constant eigenvalues found", count=peripheral, K=op.K)
    return report


def k_sweep(model, mu: DrivingMeasure, Ks: Sequence[int], s: float = 0.0) -> dict:
    """
    Subleading modulus per K, with a non-Cauchy flag.

    The flag is raised when successive differences stop shrinking.
    """
    moduli = []
    for K in Ks:
        moduli.append(operator_spectrum(build_galerkin(model, mu, K, s), s).subleading_modulus)
    known = [m for m in moduli if m is not None]
    diffs = [abs(b - a) for a, b in zip(known, known[1:])]
    non_cauchy = any(later > earlier + 1e-12 for earlier, later in zip(diffs, diffs[1:]))
    if non_cauchy:
        logfire.warning("K-sweep is not Cauchy", Ks=list(Ks), moduli=moduli)
    return {"K": list(Ks), "subleading_modulus": moduli, "differences": diffs, "non_cauchy": non_cauchy}


# ===================================================================
# HIGH-FREQUENCY DECAY
# ===================================================================

def _witness_set(d: int, r: float, witnesses) -> np.ndarray:
    if witnesses is None:
        witnesses = default_witnesses(d, r)
    witnesses = np.atleast_2d(np.asarray(witnesses, dtype=np.int64)).reshape(-1, d)
    high = np.linalg.norm(witnesses, axis=1) > r
    if not np.all(high):
        logfire.warning("Witness modes inside the radius dropped", dropped=int((~high).sum()), r=r)
    witnesses = witnesses[high]
    if witnesses.shape[0] == 0:
        raise ConfigurationError("Witness set is empty", key="witnesses")
    return witnesses


def _word_sum_ratios(model, mu: DrivingMeasure, witnesses: np.ndarray, s: float, n_max: int, cap: int) -> np.ndarray:
    """rho_n(k) for n = 1..n_max (rows) and every witness (columns), by exact word sums."""
    slots = affine_slots(model, mu)
    tags = witnesses.shape[0]
    modes = np.column_stack([witnesses, np.arange(tags)])
    coefs = np.ones(tags, dtype=complex)
    reference = sobolev_weights(witnesses, -s)
    out = np.empty((n_max, tags))
    for n in range(n_max):
        modes, coefs = push_modes(modes, coefs, slots, cap)
        out[n] = tagged_sobolev_norms(modes, coefs, -s, tags) / reference
    return out


def _galerkin_ratios(model, mu: DrivingMeasure, witnesses: np.ndarray, s: float, n_max: int) -> tuple:
    """rho_n(k) from powers of a Galerkin operator whose box holds the witnesses."""
    K = int(np.abs(witnesses).max()) + 4
    op = build_galerkin(model, mu, K, s)
    weights = op.index.weights(-s)
    cols = op.index.index_of(witnesses)
    vectors = np.zeros((op.index.size, witnesses.shape[0]), dtype=complex)
    vectors[cols, np.arange(witnesses.shape[0])] = 1.0
    out = np.empty((n_max, witnesses.shape[0]))
    for n in range(n_max):
        vectors = op.matrix @ vectors
        out[n] = np.sqrt((np.abs(vectors) ** 2 * weights[:, None]).sum(axis=0)) / weights[cols]
    return out, op.max_truncation_loss


def _covector_bound(model, mu: DrivingMeasure, witnesses: np.ndarray, s: float, n_max: int, seed: int) -> np.ndarray:
    """Monte Carlo sup over witness covectors of E ||(D f_w)^T xi||^-s for n = 1..n_max."""
    xi = (witnesses / np.linalg.norm(witnesses, axis=1, keepdims=True)).T
    batch = sample_batch(mu, n_max, COVECTOR_SAMPLES, make_stream(seed, COVECTOR_STREAM))
    d = model.state_dimension
    products = np.broadcast_to(np.eye(d), (batch.size, d, d)).copy()
    origin = np.zeros((1, d))
    out = np.empty(n_max)
    per_step = batch.slots_per_step
    for step in range(n_max):
        for column in batch.columns[step * per_step:(step + 1) * per_step]:
            for map_id, mask, phase in column.groups():
                sel = slice(None) if mask is None else mask
                products[sel] = model.jacobian(map_id, origin, phase)[0] @ products[sel]
        norms = np.linalg.norm(np.swapaxes(products, 1, 2) @ xi, axis=1)
        out[step] = float(np.max(np.mean(norms ** (-s), axis=0)))
    return out


def _fit_rate(values: np.ndarray) -> tuple:
    """exp(slope) of ln(values[n-1]) against n over n in [ceil(n_max/2), n_max]."""
    n_max = values.shape[0]
    lo = int(np.ceil(n_max / 2))
    ns = np.arange(lo, n_max + 1)
    logs = np.log(np.maximum(values[lo - 1:], np.finfo(float).tiny))
    slope, intercept = np.polyfit(ns, logs, 1)
    return float(np.exp(slope)), float(slope), float(intercept), (lo, n_max)


def essential_radius_estimate(
    model,
    mu: DrivingMeasure,
    s: float,
    r: float,
    n_max: int,
    witnesses=None,
    budget: Optional[CocycleBudget] = None,
) -> EssentialRadiusEstimate:
    """
    High-frequency decay rate of G in H^-s.

    For every witness mode k with |k| > r, rho_n(k) = |G^n e_k|_{-s} / |e_k|_{-s}
    is computed exactly for affine models (word sums with merged mode
    collisions) and from operator powers otherwise. eta_hat is exp of the
    least-squares slope of ln max_k rho_n(k) over the second half of 1..n_max.

    Raises:
        ConfigurationError: witness set empty, s outside (0, 1], n_max < 2
        BudgetExceededError: word-sum terms beyond the word cap
    """
    budget = budget or CocycleBudget()
    if not 0.0 < s <= 1.0:
        raise ConfigurationError(f"s must lie in (0, 1], got {s}", key="s")
    if n_max < 2:
        raise ConfigurationError("n_max must be >= 2 for a rate fit", key="n_max")
    check_galerkin_model(model)
    witnesses = _witness_set(model.state_dimension, r, witnesses)

    with logfire.span("spectral.essential_radius", model_id=model.model_id, s=s, r=r, n_max=n_max, witnesses=len(witnesses)):
        loss = 0.0
        if is_affine(model):
            ratios = _word_sum_ratios(model, mu, witnesses, s, n_max, budget.word_cap)
            covector = _covector_bound(model, mu, witnesses, s, n_max, budget.seed)
            exact = True
        else:
            ratios, loss = _galerkin_ratios(model, mu, witnesses, s, n_max)
            covector = None
            exact = loss == 0.0

        worst = ratios.max(axis=1)
        eta, slope, intercept, fit_range = _fit_rate(worst)
        estimate = EssentialRadiusEstimate(
            eta_hat=eta,
            slope=slope,
            intercept=intercept,
            fit_range=fit_range,
            s=s,
            r=r,
            log_rho_max=[float(v) for v in np.log(np.maximum(worst, np.finfo(float).tiny))],
            rho={witness_key(k): [float(v) for v in ratios[:, j]] for j, k in enumerate(witnesses)},
            covector_eta=None if covector is None else _fit_rate(covector)[0],
            covector_bound=[] if covector is None else [float(v) for v in covector],
            exact=exact,
            max_truncation_loss=loss,
        )
        logfire.info("Essential radius estimated", eta_hat=eta, covector_eta=estimate.covector_eta)
        if eta >= 1.0:
            logfire.warning("No high-frequency decay", eta_hat=eta)
        return estimate


def lasota_yorke_fit(
    model,
    mu: DrivingMeasure,
    s: float,
    s_bar: float,
    n_list: Sequence[int],
    witnesses=None,
    eta: Optional[float] = None,
    r: float = 4.0,
    budget: Optional[CocycleBudget] = None,
) -> LasotaYorkeReport:
    """
    Smallest C_n with |G^n e_k|_{-s} <= eta^n |e_k|_{-s} + C_n |e_k|_{-s_bar} on every witness.

    ``eta`` defaults to eta_hat of ``essential_radius_estimate`` at radius ``r``.
    Default witnesses are all nonzero modes with |k|_inf <= floor(r) + 2.
    """
    if s_bar <= s:
        raise ConfigurationError(f"s_bar ({s_bar}) must exceed s ({s})", key="s_bar")
    n_list = sorted({int(n) for n in n_list})
    if not n_list or n_list[0] < 1:
        raise ConfigurationError("n_list needs positive steps", key="n_list")
    budget = budget or CocycleBudget()
    if eta is None:
        eta = essential_radius_estimate(model, mu, s, r, max(n_list[-1], 2), budget=budget).eta_hat

    d = model.state_dimension
    if witnesses is None:
        box = ModeIndex(d=d, K=int(np.floor(r)) + 2).modes
        witnesses = box[np.any(box != 0, axis=1)]
    witnesses = _witness_set(d, 0.0, witnesses)

    n_max = n_list[-1]
    if is_affine(model):
        ratios = _word_sum_ratios(model, mu, witnesses, s, n_max, budget.word_cap)
    else:
        ratios, _ = _galerkin_ratios(model, mu, witnesses, s, n_max)
    strong = sobolev_weights(witnesses, -s)
    weak = sobolev_weights(witnesses, -s_bar)

    constants = {}
    for n in n_list:
        excess = (ratios[n - 1] - eta ** n) * strong / weak
        constants[n] = float(max(0.0, excess.max()))

    gapless = eta >= 1.0 - 1e-12
    report = LasotaYorkeReport(s=s, s_bar=s_bar, eta=float(eta), constants=constants, gapless=gapless, feasible=not gapless)
    if gapless:
        logfire.warning("Lasota-Yorke inequality has no eta < 1", eta=eta)
    return report


# ===================================================================
# STABILITY
# ===================================================================

@dataclass
class FamilyMember:
    """One perturbation of the base system."""

    label: str
    model: object
    measure: DrivingMeasure
    parameter: Optional[float] = None
    operator: Optional[FourierOperator] = None


def _subleading(op: FourierOperator, s: float) -> tuple:
    report = operator_spectrum(op, s)
    if report.subleading_eigenvalue is None:
        return None, report
    re, im = report.subleading_eigenvalue
    return complex(re, im), report


def _dd_or_none(base_model, base_measure, member: FamilyMember, grid: SamplingGrid) -> Optional[float]:
    if base_measure == member.measure and base_model is member.model:
        return 0.0
    if base_measure.kind != MeasureKind.FINITE or member.measure.kind != MeasureKind.FINITE:
        return None
    try:
        return dd_distance(base_measure, member.measure, grid, base_model, member.model)
    except LabError as e:
        logfire.warning("dd distance not computable", member=member.label, error=str(e))
        return None


def stability_sweep(
    base_model,
    base_measure: DrivingMeasure,
    family: Sequence[FamilyMember],
    K: int,
    s: float = 0.0,
    grid: Optional[SamplingGrid] = None,
) -> StabilityReport:
    """
    Subleading eigenvalue of every family member against the base.

    The log-log slope is fitted of deviation against dd when at least two
    members have positive dd, else against the members' ``parameter``.

    Raises:
        ConfigurationError: a prebuilt member operator has a different K
    """
    grid = grid or SamplingGrid(points_per_axis=16, dimension=base_model.state_dimension)
    for member in family:
        if member.operator is not None and member.operator.K != K:
            raise ConfigurationError(
                f"Family member '{member.label}' was built at K={member.operator.K}, sweep uses K={K}", key="K"
            )

    with logfire.span("spectral.stability_sweep", model_id=base_model.model_id, K=K, members=len(family)):
        base_op = build_galerkin(base_model, base_measure, K, s)
        base_value, base_report = _subleading(base_op, s)
        base = StabilityPoint(
            label="base",
            subleading=None if base_value is None else (base_value.real, base_value.imag),
            subleading_modulus=base_report.subleading_modulus,
            deviation=0.0,
            modulus_deviation=0.0,
            dd=0.0,
            max_truncation_loss=base_op.max_truncation_loss,
        )

        points = []
        for member in family:
            op = member.operator or build_galerkin(member.model, member.measure, K, s)
            value, report = _subleading(op, s)
            deviation = None if value is None or base_value is None else float(abs(value - base_value))
            points.append(StabilityPoint(
                label=member.label,
                parameter=member.parameter,
                subleading=None if value is None else (value.real, value.imag),
                subleading_modulus=report.subleading_modulus,
                deviation=deviation,
                modulus_deviation=None if value is None or base_value is None else float(abs(abs(value) - abs(base_value))),
                dd=_dd_or_none(base_model, base_measure, member, grid),
                max_truncation_loss=op.max_truncation_loss,
            ))
            logfire.info("Family member solved", member=member.label, deviation=deviation)

        slope, against = _loglog_slope(points)
        return StabilityReport(K=K, s=s, base=base, members=points, loglog_slope=slope, slope_against=against)


def _loglog_slope(points: List[StabilityPoint]) -> tuple:
    for against in ("dd", "parameter"):
        xs, ys = [], []
        for p in points:
            x = getattr(p, against)
            if x is not None and x > 0 and p.deviation is not None and p.deviation > 0:
                xs.append(np.log(x))
                ys.append(np.log(p.deviation))
        if len(xs) >= 2 and np.ptp(xs) > 0:
            return float(np.polyfit(xs, ys, 1)[0]), against
    return None, None


def pierrehumbert_stability_sweep(tau: float, denominators: Sequence[int], K: int, s: float = 0.0) -> StabilityReport:
    """Phase discretization sweep t in {j/Q} against the uniform-phase model."""
    base = build_model(PierrehumbertConfig(tau=tau))
    family = []
    for q in denominators:
        model, measure = pierrehumbert_phase_family(tau, q)
        family.append(FamilyMember(label=f"Q={q}", model=model, measure=measure, parameter=1.0 / q))
    return stability_sweep(base, base.default_measure, family, K, s)


def require_galerkin_fit(op: FourierOperator, tolerance: float = 1e-3) -> bool:
    """Warn (and return False) when the operator drops more than ``tolerance`` weight in some column."""
    if op.max_truncation_loss > tolerance:
        logfire.warning("Galerkin truncation loss above tolerance", loss=op.max_truncation_loss, tolerance=tolerance)
        return False
    return True
