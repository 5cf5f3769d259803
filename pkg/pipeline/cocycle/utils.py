"""
Cocycle Utilities

Vectorized propagation of frames along batches of words. A "lane" is one
(word, base point, frame) triple; all lanes advance together letter by letter.
"""

import numpy as np

from pipeline.core.exceptions import ConfigurationError, DimensionMismatchError, UnsupportedMeasureError
from pipeline.measure.models import DrivingMeasure, MeasureKind, WordBatch

from .models import FrameKind

LANE_CHUNK = 65_536


def fiber_matrix(J: np.ndarray, kind: FrameKind) -> np.ndarray:
    """Derivative acting on the chosen bundle: D f, or (D f)^-T for covectors."""
    if kind == FrameKind.COTANGENT:
        return np.swapaxes(np.linalg.inv(J), -1, -2)
    return J


def _log_increment(new: np.ndarray, old: np.ndarray) -> np.ndarray:
    """Per-lane log of the volume ratio between pushed and previous frames."""
    if new.shape[-1] == 1:
        return np.log(np.linalg.norm(new[..., 0], axis=-1) / np.linalg.norm(old[..., 0], axis=-1))
    _, new_logdet = np.linalg.slogdet(np.swapaxes(new, -1, -2) @ new)
    _, old_logdet = np.linalg.slogdet(np.swapaxes(old, -1, -2) @ old)
    return 0.5 * (new_logdet - old_logdet)


def _renormalize(frames: np.ndarray) -> np.ndarray:
    if frames.shape[-1] == 1:
        return frames / np.linalg.norm(frames, axis=-2, keepdims=True)
    q, _ = np.linalg.qr(frames)
    return q


def push_frames(model, batch: WordBatch, bases: np.ndarray, frames: np.ndarray, kind: FrameKind) -> np.ndarray:
    """
    Log volume growth of each lane's frame along its word.

    Args:
        model: Model handle
        batch: Words, one per lane
        bases: (lanes, state_dimension) starting points
        frames: (lanes, fiber_dimension, k) starting frames
        kind: tangent or cotangent action

    Returns:
        (lanes,) total log growth (not divided by the step count)
    """
    x = np.array(bases, dtype=float, copy=True)
    v = np.array(frames, dtype=float, copy=True)
    total = np.zeros(batch.size)
    constant = model.constant_derivative
    origin = np.zeros((1, model.state_dimension))

    for column in batch.columns:
        for map_id, mask, phase in column.groups():
            sel = slice(None) if mask is None else mask
            if constant:
                matrix = fiber_matrix(model.jacobian(map_id, origin, phase)[0], kind)
                pushed = matrix @ v[sel]
            else:
                xs = x[sel]
                ph = phase[sel] if isinstance(phase, np.ndarray) and mask is not None else phase
                pushed = fiber_matrix(model.jacobian(map_id, xs, ph), kind) @ v[sel]
                x[sel] = model.forward(map_id, xs, ph)
            total[sel] += _log_increment(pushed, v[sel])
            v[sel] = _renormalize(pushed)
    return total


def lane_values(
    model,
    batch: WordBatch,
    base: np.ndarray,
    frame: np.ndarray,
    kind: FrameKind,
    chunk: int = LANE_CHUNK,
) -> np.ndarray:
    """Per-word log growth divided by the step count, for one (base, frame) shared by all words."""
    out = np.empty(batch.size)
    frame = np.asarray(frame, dtype=float)
    if frame.ndim == 1:
        frame = frame[:, None]
    for start in range(0, batch.size, chunk):
        sub = batch.take(start, min(start + chunk, batch.size))
        bases = np.broadcast_to(base, (sub.size, model.state_dimension))
        frames = np.broadcast_to(frame, (sub.size,) + frame.shape)
        out[start:start + sub.size] = push_frames(model, sub, bases, frames, kind) / batch.steps
    return out


def direction_values(
    model,
    batch: WordBatch,
    base: np.ndarray,
    directions: np.ndarray,
    kind: FrameKind,
    chunk: int = LANE_CHUNK,
) -> np.ndarray:
    """
    Weighted per-step estimates for many unit vectors over a common word set.

    Returns:
        (directions,) averages sum_w weight_w * growth_w(direction) / N
    """
    n_dirs = directions.shape[0]
    words_per_chunk = max(1, chunk // max(n_dirs, 1))
    acc = np.zeros(n_dirs)
    for start in range(0, batch.size, words_per_chunk):
        sub = batch.take(start, min(start + words_per_chunk, batch.size))
        lanes = sub.repeat(n_dirs)
        bases = np.broadcast_to(base, (lanes.size, model.state_dimension))
        frames = np.tile(directions, (sub.size, 1))[:, :, None]
        growth = push_frames(model, lanes, bases, frames, kind).reshape(sub.size, n_dirs)
        acc += sub.weights @ growth
    return acc / batch.steps


def require_finite(measure: DrivingMeasure, what: str) -> None:
    """Reject measures with parametric slots for operations that need explicit matrices."""
    if any(slot.kind != MeasureKind.FINITE for slot in measure.slots()):
        raise UnsupportedMeasureError(f"{what} needs a finite (or convolution of finite) measure")


def check_fiber(model, vector: np.ndarray, label: str) -> None:
    if vector.shape[0] != model.fiber_dimension:
        raise DimensionMismatchError(
            f"{label} has dimension {vector.shape[0]}, model fiber dimension is {model.fiber_dimension}"
        )


def batch_means(values: np.ndarray, batches: int = 20) -> np.ndarray:
    """Means of ``batches`` contiguous equal-size batches (the remainder is dropped)."""
    size = values.shape[0] // batches
    if size < 1:
        raise ConfigurationError(f"Need at least {batches} samples for batch means, got {values.shape[0]}")
    return values[: size * batches].reshape(batches, size, *values.shape[1:]).mean(axis=1)
