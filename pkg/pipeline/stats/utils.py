"""
Stats Utilities

Mode-space propagation of observables (exact word sums for affine models,
Galerkin powers otherwise) and vectorized orbit stepping for Monte Carlo.
"""

from typing import Optional, Tuple

import numpy as np

from pipeline.core.exceptions import BudgetExceededError, ConfigurationError, UnsupportedModelError
from pipeline.measure.main import sample_batch
from pipeline.measure.models import DrivingMeasure, WordBatch
from pipeline.spectral.main import build_galerkin
from pipeline.spectral.utils import affine_slots, is_affine, merge_modes, push_modes

Expansion = Tuple[np.ndarray, np.ndarray]


def advance(model, batch: WordBatch, x: np.ndarray) -> np.ndarray:
    """Apply every letter of ``batch`` (one word per row of ``x``) in order."""
    x = np.array(x, dtype=float, copy=True)
    for column in batch.columns:
        for map_id, mask, phase in column.groups():
            if mask is None:
                x = model.forward(map_id, x, phase)
            else:
                ph = phase[mask] if isinstance(phase, np.ndarray) else phase
                x[mask] = model.forward(map_id, x[mask], ph)
    return x


def step_points(model, mu: DrivingMeasure, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One random step of the annealed dynamics for every row of ``x``."""
    return advance(model, sample_batch(mu, 1, x.shape[0], rng), x)


def require_torus(model) -> None:
    if model.state_dimension < 1:
        raise UnsupportedModelError(f"Observables need a torus state space ('{model.variant}' has a point base)")


def multiply(a: Expansion, b: Expansion) -> Expansion:
    """Product of two Fourier sums (mode convolution)."""
    modes_a, coefs_a = a
    modes_b, coefs_b = b
    if modes_a.shape[0] == 0 or modes_b.shape[0] == 0:
        return modes_a[:0], coefs_a[:0]
    modes = (modes_a[:, None, :] + modes_b[None, :, :]).reshape(-1, modes_a.shape[1])
    coefs = (coefs_a[:, None] * coefs_b[None, :]).reshape(-1)
    return merge_modes(modes, coefs)


class ModePropagator:
    """
    Applies G to finite Fourier sums.

    Affine models are propagated exactly by word sums; pierrehumbert models
    through a Galerkin operator on the box |k|_inf <= K. Expansions leaving
    that box raise BudgetExceededError("operator box", ...).
    """

    def __init__(self, model, mu: DrivingMeasure, K: int, word_cap: int):
        self.model = model
        self.K = K
        self.word_cap = word_cap
        self.exact = is_affine(model)
        self.max_truncation_loss = 0.0
        if self.exact:
            self._slots = affine_slots(model, mu)
            self._op = None
        else:
            self._op = build_galerkin(model, mu, K)
            self.max_truncation_loss = self._op.max_truncation_loss

    def step(self, expansion: Expansion) -> Expansion:
        modes, coefs = expansion
        if self.exact:
            tagged = np.column_stack([modes, np.zeros(modes.shape[0], dtype=np.int64)])
            tagged, coefs = push_modes(tagged, coefs, self._slots, self.word_cap)
            return tagged[:, :-1], coefs

        index = self._op.index
        idx = index.index_of(modes)
        if np.any(idx < 0):
            raise BudgetExceededError("operator box", int(np.abs(modes).max()), self.K)
        vector = np.zeros(index.size, dtype=complex)
        np.add.at(vector, idx, coefs)
        vector = self._op.matrix @ vector
        live = np.flatnonzero(vector)
        return index.modes[live], vector[live]


def propagator_for(model, mu: DrivingMeasure, K: Optional[int], K_obs: int, word_cap: int) -> ModePropagator:
    if K is None:
        K = max(8, 2 * K_obs)
    if K < K_obs:
        raise ConfigurationError(f"Observable band {K_obs} exceeds operator box K={K}", key="K")
    return ModePropagator(model, mu, K, word_cap)
