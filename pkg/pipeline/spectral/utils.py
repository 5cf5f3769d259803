"""
Spectral Utilities

Assembly of per-slot Fourier operators and exact mode word sums.

A model acts on modes by composition: e_k o f. For an affine map x -> M x + c
this is e^{2 pi i <k, c>} e_{M^T k}; for a sine shear it is the Jacobi-Anger
series over mode shifts along the driving axis.
"""

import hashlib
from collections import defaultdict
from typing import Dict, List, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from pipeline.core.exceptions import BudgetExceededError, UnsupportedMeasureError, UnsupportedModelError
from pipeline.maps.systems import AffineTorusModel, PierrehumbertModel, ProductLiftModel
from pipeline.measure.models import DrivingMeasure, MeasureKind
from pipeline.measure.utils import involves_inverse

from .models import ModeIndex, sobolev_weights

TWO_PI = 2.0 * np.pi

# Entries below this modulus are moved into the truncation loss
ENTRY_FLOOR = 1e-18
# Phase averages below this modulus are exact cancellations up to rounding
PHASOR_FLOOR = 1e-13
# Bessel orders beyond |z| + BESSEL_MARGIN are below double precision
BESSEL_MARGIN = 40
MAX_MODE_MAGNITUDE = 2 ** 52
MODE_MAGNITUDE_LIMIT = "mode magnitude"


def is_affine(model) -> bool:
    return isinstance(model, AffineTorusModel) or (
        isinstance(model, ProductLiftModel) and isinstance(model.base, AffineTorusModel)
    )


def check_galerkin_model(model) -> None:
    if is_affine(model) or isinstance(model, PierrehumbertModel):
        return
    raise UnsupportedModelError(
        f"Galerkin operators are available for affine-torus and pierrehumbert models (got '{model.variant}')"
    )


def model_hash(model, measure: DrivingMeasure) -> bytes:
    """32-byte digest identifying (model, measure) in exports and reports."""
    return hashlib.sha256(f"{model.model_id}|{measure!r}".encode()).digest()


# ===================================================================
# OPERATOR ASSEMBLY
# ===================================================================

def _affine_slot(model, slot: DrivingMeasure, index: ModeIndex) -> Tuple[sp.csc_matrix, np.ndarray]:
    if slot.kind != MeasureKind.FINITE:
        raise UnsupportedMeasureError("Affine models take finite measures only")
    modes = index.modes
    n = index.size
    rows, cols, vals = [], [], []
    loss = np.zeros(n)
    columns = np.arange(n)
    for atom in slot.atoms:
        matrix, offset = model.affine_parts(atom.map_id)
        target = np.rint(modes @ matrix).astype(np.int64)
        phase = np.exp(2j * np.pi * (modes @ offset))
        idx = index.index_of(target)
        inside = idx >= 0
        rows.append(idx[inside])
        cols.append(columns[inside])
        vals.append(atom.weight * phase[inside])
        loss[~inside] += atom.weight
    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsc()
    return matrix, loss


def _shift_phasor(slot: DrivingMeasure, family_atoms: List[Tuple[float, float]], shifts: np.ndarray) -> np.ndarray:
    """Average of e^{2 pi i n t} over the slot's phases for every shift n."""
    if slot.kind == MeasureKind.PARAMETRIC:
        period = slot.phase_period
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (np.exp(2j * np.pi * shifts * period) - 1.0) / (2j * np.pi * shifts * period)
        out[shifts == 0] = 1.0
    else:
        out = np.zeros(shifts.shape, dtype=complex)
        for weight, phase in family_atoms:
            out += weight * np.exp(2j * np.pi * shifts * phase)
    out[np.abs(out) < PHASOR_FLOOR] = 0.0
    return out


def _shear_slot(model: PierrehumbertModel, slot: DrivingMeasure, index: ModeIndex) -> Tuple[sp.csc_matrix, np.ndarray]:
    modes = index.modes
    n = index.size
    # map id -> [(weight, phase)] so atoms of one family share a phasor
    groups: Dict[str, List[Tuple[float, float]]] = defaultdict(list)
    if slot.kind == MeasureKind.PARAMETRIC:
        groups[slot.family] = []
    else:
        for atom in slot.atoms:
            groups[atom.map_id].append((atom.weight, 0.0 if atom.phase is None else atom.phase))

    matrix = sp.csc_matrix((n, n), dtype=complex)
    loss = np.zeros(n)
    for map_id, atoms in groups.items():
        base, kind = model.resolve(map_id)
        moved, driver = model._axes(base)
        tau = -model.tau if involves_inverse(kind) else model.tau
        z = tau * modes[:, moved]
        reach = int(np.ceil(np.abs(z).max())) + index.K + BESSEL_MARGIN
        shifts = np.arange(-reach, reach + 1)
        phasor = _shift_phasor(slot, atoms, shifts)
        live = phasor != 0
        shifts, phasor = shifts[live], phasor[live]

        coef = jv(shifts[None, :], z[:, None]) * phasor[None, :]
        target = np.repeat(modes[:, None, :], shifts.size, axis=1)
        target[:, :, driver] += shifts[None, :]
        idx = index.index_of(target.reshape(-1, index.d)).reshape(n, shifts.size)
        keep = (idx >= 0) & (np.abs(coef) >= ENTRY_FLOOR)
        loss += np.where(keep, 0.0, np.abs(coef)).sum(axis=1)
        cols = np.broadcast_to(np.arange(n)[:, None], idx.shape)
        matrix = matrix + sp.coo_matrix((coef[keep], (idx[keep], cols[keep])), shape=(n, n)).tocsc()
    return matrix, loss


def slot_operator(model, slot: DrivingMeasure, index: ModeIndex) -> Tuple[sp.csc_matrix, np.ndarray]:
    """Operator of one leaf measure and its per-column truncation loss."""
    if is_affine(model):
        return _affine_slot(model, slot, index)
    if isinstance(model, PierrehumbertModel):
        return _shear_slot(model, slot, index)
    raise UnsupportedModelError(f"No Galerkin assembly for '{model.variant}'")


def compose_slots(parts: List[Tuple[sp.csc_matrix, np.ndarray]]) -> Tuple[sp.csc_matrix, np.ndarray]:
    """
    Operator of a convolution from its slot operators (slot 0 applied first).

    G = G_0 G_1 ... G_{m-1}. Loss of a product: weight lost by the right factor
    plus weight the left factor loses from what the right factor kept.
    """
    matrix, loss = parts[-1]
    for left, left_loss in reversed(parts[:-1]):
        loss = loss + abs(matrix).T @ left_loss
        matrix = (left @ matrix).tocsc()
    return matrix, loss


# ===================================================================
# MODE WORD SUMS
# ===================================================================

def affine_slots(model, measure: DrivingMeasure) -> List[List[Tuple[np.ndarray, np.ndarray, float]]]:
    """(M, c, weight) per atom for every slot, in application order."""
    out = []
    for slot in measure.slots():
        if slot.kind != MeasureKind.FINITE:
            raise UnsupportedMeasureError("Word sums need finite (or convolution of finite) measures")
        out.append([(*model.affine_parts(atom.map_id), atom.weight) for atom in slot.atoms])
    return out


def merge_modes(modes: np.ndarray, coefs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sum coefficients of identical rows."""
    unique, inverse = np.unique(modes, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    merged = np.bincount(inverse, weights=coefs.real, minlength=len(unique)) + 1j * np.bincount(
        inverse, weights=coefs.imag, minlength=len(unique)
    )
    return unique, merged


def push_modes(
    modes: np.ndarray,
    coefs: np.ndarray,
    slots: List[List[Tuple[np.ndarray, np.ndarray, float]]],
    cap: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One step of G on a sparse mode expansion.

    ``modes`` rows are (k_1..k_d, tag); the trailing tag column keeps
    expansions of different witnesses apart. Slots are applied last to first.
    """
    d = modes.shape[1] - 1
    for atoms in reversed(slots):
        requested = modes.shape[0] * len(atoms)
        if requested > cap:
            raise BudgetExceededError("word-sum terms", requested, cap)
        new_modes, new_coefs = [], []
        for matrix, offset, weight in atoms:
            k = modes[:, :d]
            pushed = np.rint(k @ matrix).astype(np.int64)
            new_modes.append(np.column_stack([pushed, modes[:, d]]))
            new_coefs.append(coefs * weight * np.exp(2j * np.pi * (k @ offset)))
        modes, coefs = merge_modes(np.concatenate(new_modes), np.concatenate(new_coefs))
        if modes.size and np.abs(modes[:, :d]).max() > MAX_MODE_MAGNITUDE:
            raise BudgetExceededError(MODE_MAGNITUDE_LIMIT, int(np.abs(modes[:, :d]).max()), MAX_MODE_MAGNITUDE)
    return modes, coefs


def tagged_sobolev_norms(modes: np.ndarray, coefs: np.ndarray, sigma: float, tags: int) -> np.ndarray:
    """Per-tag H^sigma norm sqrt(sum |c_m|^2 (1 + |m|^2)^sigma)."""
    w = sobolev_weights(modes[:, :-1], 2.0 * sigma)
    return np.sqrt(np.bincount(modes[:, -1], weights=np.abs(coefs) ** 2 * w, minlength=tags))


def default_witnesses(d: int, r: float) -> np.ndarray:
    """Integer modes with r < |k| and |k|_inf <= floor(r) + 2."""
    radius = int(np.floor(r)) + 2
    box = ModeIndex(d=d, K=radius).modes
    return box[np.linalg.norm(box, axis=1) > r]


def witness_key(k: np.ndarray) -> str:
    return ",".join(str(int(v)) for v in k)
