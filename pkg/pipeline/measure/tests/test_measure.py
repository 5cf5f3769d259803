"""
Test suite for driving measures

Covers word sampling (determinism and law), exact enumeration, the transform
algebra and the dd distance on translation measures.

Run with:
    pytest pipeline/measure/tests/test_measure.py -v
"""

from collections import Counter

import numpy as np
import pytest
from scipy import stats

from pipeline.core.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    UnsupportedMeasureError,
    UnsupportedTransformError,
)
from pipeline.core.streams import make_stream
from pipeline.maps import PierrehumbertConfig, build_model
from pipeline.measure import (
    DrivingMeasure,
    MapAtom,
    MeasureKind,
    SamplingGrid,
    TransformKind,
    dd_distance,
    enumerate_batch,
    enumerate_words,
    sample_batch,
    sample_word,
    transform_measure,
)


@pytest.fixture
def translations(affine_model):
    """Four translations of T^2."""
    return affine_model({
        "a": (np.eye(2), (0.0, 0.0)),
        "b": (np.eye(2), (0.1, 0.0)),
        "c": (np.eye(2), (0.1, 0.2)),
        "e": (np.eye(2), (0.45, 0.3)),
    })


# ===================================================================
# CONSTRUCTION
# ===================================================================

def test_weights_must_sum_to_one():
    with pytest.raises(ConfigurationError) as exc:
        DrivingMeasure.finite([("f", 0.5), ("g", 0.4)])
    assert exc.value.key == "measure.atoms"


def test_atom_weight_range():
    with pytest.raises(ConfigurationError):
        MapAtom(map_id="f", weight=1.5)


def test_convolution_needs_factors():
    with pytest.raises(ConfigurationError):
        DrivingMeasure(kind=MeasureKind.CONVOLUTION)


# ===================================================================
# SAMPLING
# ===================================================================

def test_dirac_word():
    word = sample_word(DrivingMeasure.dirac("f"), 3, seed=123)
    assert [a.map_id for a in word.letters] == ["f", "f", "f"]
    assert word.weight == 1.0


def test_sample_word_is_deterministic():
    measure = DrivingMeasure.finite([("f", 0.3), ("g", 0.7)])
    first = sample_word(measure, 12, seed=7)
    second = sample_word(measure, 12, seed=7)
    assert first == second
    assert first.weight == pytest.approx(np.prod([a.weight for a in first.letters]))


def test_sample_word_law_matches_enumeration():
    measure = DrivingMeasure.uniform(["f", "g"])
    batch = sample_batch(measure, 2, 100_000, make_stream(7, 0))
    codes = batch.columns[0].indices * 2 + batch.columns[1].indices
    observed = np.bincount(codes, minlength=4)
    expected = np.array([w.weight for w in enumerate_words(measure, 2, cap=10**6)]) * 100_000
    _, p_value = stats.chisquare(observed, expected)
    assert p_value > 0.001


def test_sample_word_across_seeds_is_uniform():
    measure = DrivingMeasure.uniform(["f", "g"])
    counts = Counter(
        "".join(a.map_id for a in sample_word(measure, 2, seed).letters) for seed in range(4000)
    )
    _, p_value = stats.chisquare([counts[w] for w in ("ff", "fg", "gf", "gg")])
    assert p_value > 0.001


def test_parametric_phase_is_uniform():
    measure = DrivingMeasure(kind=MeasureKind.PARAMETRIC, family="H", phase_period=1.0)
    phases = np.array([sample_word(measure, 1, seed).letters[0].phase for seed in range(2000)])
    assert np.all((phases >= 0.0) & (phases < 1.0))
    assert stats.kstest(phases, "uniform", args=(0.0, 1.0)).pvalue > 0.001


def test_convolution_word_is_flattened():
    model = build_model(PierrehumbertConfig(tau=1.0))
    word = sample_word(model.default_measure, 3, seed=1)
    assert word.steps == 3
    assert [a.map_id for a in word.letters] == ["V", "H"] * 3


# ===================================================================
# ENUMERATION
# ===================================================================

def test_enumerate_uniform_pair():
    words = enumerate_words(DrivingMeasure.uniform(["f", "g"]), 2, cap=10**6)
    assert len(words) == 4
    assert [w.weight for w in words] == pytest.approx([0.25] * 4)


def test_enumerate_product_weights():
    words = enumerate_words(DrivingMeasure.finite([("f", 0.3), ("g", 0.7)]), 3, cap=10**6)
    assert len(words) == 8
    by_name = {"".join(a.map_id for a in w.letters): w.weight for w in words}
    assert by_name["ggg"] == pytest.approx(0.343, abs=1e-15)
    assert sum(by_name.values()) == pytest.approx(1.0, abs=1e-12)


def test_enumeration_budget():
    with pytest.raises(BudgetExceededError, match="1594323"):
        enumerate_batch(DrivingMeasure.uniform(["a", "b", "c"]), 13, cap=10**6)


def test_parametric_cannot_be_enumerated():
    measure = DrivingMeasure(kind=MeasureKind.PARAMETRIC, family="H", phase_period=1.0)
    with pytest.raises(UnsupportedMeasureError):
        enumerate_words(measure, 1, cap=10)


# ===================================================================
# TRANSFORMS
# ===================================================================

def test_inverse_of_cat_dirac(cat_model):
    inverse = transform_measure(DrivingMeasure.dirac("A"), "inverse", cat_model)
    assert inverse.map_ids() == ("A^-1",)
    np.testing.assert_array_equal(cat_model.linear_part("A^-1"), [[1, -1], [-1, 2]])
    inverse_transpose = transform_measure(DrivingMeasure.dirac("A"), TransformKind.INVERSE_TRANSPOSE, cat_model)
    np.testing.assert_array_equal(cat_model.linear_part(inverse_transpose.atoms[0].map_id), [[1, -1], [-1, 2]])


def test_transpose_of_symmetric_pair(affine_model):
    model = affine_model({"S": ([[1, 1], [0, 1]], None)})
    measure = DrivingMeasure.uniform(["S", "S^T"])
    transposed = transform_measure(measure, "transpose", model)
    assert set(transposed.map_ids()) == set(measure.map_ids())
    assert transposed.weights == pytest.approx(measure.weights)


@pytest.mark.parametrize("kind", ["inverse", "transpose", "inverse-transpose"])
def test_transforms_are_involutions(kind):
    measure = DrivingMeasure.finite([("A", 0.25), ("B^T", 0.75)])
    assert transform_measure(transform_measure(measure, kind), kind) == measure


def test_inverse_transpose_composition(cat_model):
    measure = DrivingMeasure.dirac("A")
    composed = transform_measure(transform_measure(measure, "inverse"), "transpose")
    reversed_order = transform_measure(transform_measure(measure, "transpose"), "inverse")
    direct = transform_measure(measure, "inverse-transpose")
    assert composed == reversed_order == direct
    matrix = cat_model.linear_part(direct.atoms[0].map_id)
    np.testing.assert_allclose(matrix, np.linalg.inv(cat_model.linear_part("A")).T, atol=1e-12)


def test_transpose_refused_for_nonlinear_model():
    model = build_model(PierrehumbertConfig(tau=1.0))
    with pytest.raises(UnsupportedTransformError):
        transform_measure(model.default_measure, "transpose", model)


def test_inverse_reverses_convolution():
    model = build_model(PierrehumbertConfig(tau=1.0))
    inverse = transform_measure(model.default_measure, "inverse", model)
    assert [f.family for f in inverse.factors] == ["H^-1", "V^-1"]


def _one_step_matrix(model, measure):
    (word,) = enumerate_words(measure, 1, cap=10)
    product = np.eye(model.state_dimension)
    for letter in word.letters:
        product = model.linear_part(letter.map_id) @ product
    return product


@pytest.mark.parametrize(
    "kind, expected",
    [
        ("inverse", lambda m: np.linalg.inv(m)),
        ("transpose", lambda m: m.T),
        ("inverse-transpose", lambda m: np.linalg.inv(m).T),
    ],
)
def test_transformed_convolution_drives_transformed_product(affine_model, kind, expected):
    S = np.array([[1.0, 1.0], [0.0, 1.0]])
    T = np.array([[1.0, 0.0], [1.0, 1.0]])
    model = affine_model({"S": (S, None), "T": (T, None)})
    conv = DrivingMeasure(
        kind=MeasureKind.CONVOLUTION,
        factors=(DrivingMeasure.dirac("S"), DrivingMeasure.dirac("T")),
    )
    np.testing.assert_allclose(_one_step_matrix(model, conv), T @ S, atol=1e-12)

    transformed = transform_measure(conv, kind, model)
    np.testing.assert_allclose(_one_step_matrix(model, transformed), expected(T @ S), atol=1e-12)


# ===================================================================
# dd DISTANCE
# ===================================================================

def test_dd_identical_measures(translations):
    mu = DrivingMeasure.uniform(["a", "b"])
    assert dd_distance(mu, mu, SamplingGrid(8), translations) == 0.0


def test_dd_two_translations(translations):
    value = dd_distance(DrivingMeasure.dirac("a"), DrivingMeasure.dirac("c"), SamplingGrid(16), translations)
    assert value == pytest.approx(np.sqrt(2 * np.hypot(0.1, 0.2)), abs=1e-12)


def test_dd_wraps_around_the_torus(affine_model):
    model = affine_model({"p": (np.eye(2), (0.05, 0.0)), "q": (np.eye(2), (0.95, 0.0))})
    value = dd_distance(DrivingMeasure.dirac("p"), DrivingMeasure.dirac("q"), SamplingGrid(4), model)
    assert value == pytest.approx(np.sqrt(2 * 0.1), abs=1e-12)


def test_dd_relabeling_coupling(translations):
    mu = DrivingMeasure.uniform(["a", "b"])
    nu = DrivingMeasure.uniform(["b", "a"])
    assert dd_distance(mu, nu, SamplingGrid(8), translations) == pytest.approx(0.0, abs=1e-12)


def test_dd_pseudometric_on_translations(translations):
    grid = SamplingGrid(4)
    measures = [
        DrivingMeasure.dirac("a"),
        DrivingMeasure.uniform(["a", "c"]),
        DrivingMeasure.finite([("b", 0.2), ("e", 0.8)]),
        DrivingMeasure.uniform(["a", "b", "c", "e"]),
    ]
    dist = {
        (i, j): dd_distance(measures[i], measures[j], grid, translations)
        for i in range(len(measures)) for j in range(len(measures))
    }
    for i in range(len(measures)):
        for j in range(len(measures)):
            assert dist[i, j] == pytest.approx(dist[j, i], abs=1e-10)
            for k in range(len(measures)):
                assert dist[i, k] <= dist[i, j] + dist[j, k] + 1e-10


def test_dd_empty_grid(translations):
    with pytest.raises(ConfigurationError):
        dd_distance(DrivingMeasure.dirac("a"), DrivingMeasure.dirac("b"), SamplingGrid(0), translations)


def test_dd_atom_budget(translations):
    many = DrivingMeasure.uniform([f"x{i}" for i in range(65)])
    with pytest.raises(BudgetExceededError):
        dd_distance(many, DrivingMeasure.dirac("a"), SamplingGrid(4), translations)


def test_dd_needs_finite_measures(translations):
    parametric = DrivingMeasure(kind=MeasureKind.PARAMETRIC, family="a", phase_period=1.0)
    with pytest.raises(UnsupportedMeasureError):
        dd_distance(parametric, DrivingMeasure.dirac("a"), SamplingGrid(4), translations)
