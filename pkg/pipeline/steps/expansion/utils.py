"""Random volume-preserving models and words for the conormal experiment."""

from typing import List

import numpy as np

from pipeline.maps.systems import AffineTorusModel
from pipeline.measure.models import DrivingMeasure, MapAtom, Word


def random_unimodular(d: int, rng: np.random.Generator, moves: int = 6) -> np.ndarray:
    """Product of ``moves`` random elementary matrices I +- E_ij (integer, det 1)."""
    m = np.eye(d)
    for _ in range(moves):
        i, j = rng.choice(d, size=2, replace=False)
        e = np.eye(d)
        e[i, j] = rng.choice([-1.0, 1.0])
        m = e @ m
    return m


def random_affine_model(d: int, generators: int, rng: np.random.Generator) -> AffineTorusModel:
    matrices = {f"M{j}": random_unimodular(d, rng) for j in range(generators)}
    offsets = {k: rng.random(d) for k in matrices}
    return AffineTorusModel(f"random-sl{d}z", matrices, offsets, DrivingMeasure.uniform(list(matrices)))


def random_word(map_ids: List[str], max_length: int, rng: np.random.Generator) -> Word:
    length = int(rng.integers(1, max_length + 1))
    letters = tuple(MapAtom(map_id=str(rng.choice(map_ids))) for _ in range(length))
    return Word(letters=letters, weight=1.0, steps=length)
