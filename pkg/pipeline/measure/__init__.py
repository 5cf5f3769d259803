"""
Measure Module

Driving measures on spaces of maps:
- sampling and exact enumeration of composition words
- the inverse / transpose / inverse-transpose transforms
- the optimal-coupling dd distance between finite measures
"""

from .main import (
    dd_distance,
    enumerate_batch,
    enumerate_words,
    sample_batch,
    sample_word,
    transform_measure,
    word_count,
)
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

__all__ = [
    "DrivingMeasure",
    "LetterColumn",
    "MapAtom",
    "MeasureKind",
    "SamplingGrid",
    "TransformKind",
    "Word",
    "WordBatch",
    "dd_distance",
    "enumerate_batch",
    "enumerate_words",
    "sample_batch",
    "sample_word",
    "transform_measure",
    "word_count",
]
