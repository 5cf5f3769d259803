"""
Test suite for the expansion experiments

Run with:
    pytest pipeline/steps/expansion/tests/ -v
"""

import math

import numpy as np
import pytest

from pipeline.measure import DrivingMeasure
from pipeline.steps.expansion.main import (
    BlockConstructionExperiment,
    ConormalExperiment,
    ExpansionExperiment,
)
from pipeline.steps.expansion.utils import random_unimodular, random_word

GOLDEN_LOG = math.log((3 + math.sqrt(5)) / 2)


@pytest.fixture
def translation(affine_model):
    return affine_model({"T": (np.eye(2), (0.5, 0.25))})


# ===================================================================
# expansion
# ===================================================================

async def test_translation_fixed_covector_is_zero(translation, experiment_data):
    data = experiment_data("expansion", {"N": 1, "vector": [0.0, 1.0]}, model=translation)
    result = await ExpansionExperiment().execute(data)

    assert result.success
    assert data.results["estimate"]["value"] == 0.0
    assert data.results["positive_3sigma"] is False
    assert data.table_name == "table"
    assert data.table[0]["label"] == "cotangent"


async def test_translation_search_reports_witness(translation, experiment_data):
    data = experiment_data("expansion", {"N": 1}, model=translation)
    await ExpansionExperiment().execute(data)

    estimate = data.results["estimate"]
    assert estimate["value"] == pytest.approx(0.0, abs=1e-15)
    assert "covector" in estimate["witness"]


async def test_cat_map_search_finds_stable_covector(cat_model, experiment_data):
    data = experiment_data("expansion", {"N": 1}, model=cat_model, measure=DrivingMeasure.dirac("A"))
    await ExpansionExperiment().execute(data)

    assert data.results["estimate"]["value"] == pytest.approx(-GOLDEN_LOG, abs=1e-3)
    assert data.results["positive_3sigma"] is False


async def test_tangent_kind_uses_tangent_frame(cat_model, experiment_data):
    data = experiment_data(
        "expansion", {"N": 2, "kind": "tangent", "vector": [1.0, 0.0]}, model=cat_model,
        measure=DrivingMeasure.dirac("A"),
    )
    await ExpansionExperiment().execute(data)

    expected = math.log(np.linalg.norm(np.array([[5.0, 3.0], [3.0, 2.0]]) @ [1.0, 0.0])) / 2
    assert data.results["estimate"]["value"] == pytest.approx(expected, rel=1e-12)
    assert data.table[0]["label"] == "tangent"


async def test_monte_carlo_fallback_is_reported(affine_model, experiment_data):
    model = affine_model({"A": (np.array([[2.0, 1.0], [1.0, 1.0]]), None), "B": (np.array([[1.0, 1.0], [0.0, 1.0]]), None)})
    data = experiment_data(
        "expansion", {"N": 4, "vector": [0.0, 1.0]}, model=model, word_cap=4, mc_samples=500,
    )
    await ExpansionExperiment().execute(data)

    assert data.results["estimate"]["fell_back"] is True
    assert data.results["estimate"]["mode"] == "monte-carlo"
    assert any("Monte Carlo" in w for w in data.warnings)


# ===================================================================
# conormal
# ===================================================================

def test_random_unimodular_has_unit_determinant():
    rng = np.random.default_rng(0)
    for d in (2, 3, 4):
        m = random_unimodular(d, rng)
        assert np.array_equal(m, np.rint(m))
        assert abs(np.linalg.det(m)) == pytest.approx(1.0, abs=1e-9)


def test_random_word_respects_length():
    rng = np.random.default_rng(1)
    for _ in range(50):
        word = random_word(["a", "b"], 3, rng)
        assert 1 <= word.steps <= 3
        assert len(word.letters) == word.steps


async def test_conormal_identity_holds(experiment_data):
    data = experiment_data("conormal", {"dimensions": [2, 3, 4], "pairs": 300}, seed=4)
    await ConormalExperiment().execute(data)

    assert data.results["pairs"] == 300
    assert data.results["max_relative_discrepancy"] <= 1e-10
    assert [row["d"] for row in data.table] == [2, 3, 4]
    assert sum(row["pairs"] for row in data.table) == 300


async def test_conormal_is_seed_deterministic(experiment_data):
    first = experiment_data("conormal", {"dimensions": [3], "pairs": 50}, seed=9)
    second = experiment_data("conormal", {"dimensions": [3], "pairs": 50}, seed=9)
    await ConormalExperiment().execute(first)
    await ConormalExperiment().execute(second)
    assert first.results == second.results


# ===================================================================
# block-construction
# ===================================================================

async def test_block_construction_without_a_qualifying_power(experiment_data):
    # ln(1/0.99) + ln(20) ~ 3.0 is far above the one-step constant of the cat pair
    data = experiment_data("block-construction", {"max_power": 1, "epsilon": 0.99, "shear": 10.0})
    await BlockConstructionExperiment().execute(data)

    assert data.results["power"] is None
    assert data.results["threshold"] == pytest.approx(math.log(1 / 0.99) + math.log(20.0))
    assert data.results["threshold_printed_reading"] == pytest.approx(math.log(0.99) + math.log(20.0))
    assert len(data.table) == 1
    assert any("max_power" in w or "clears" in w for w in data.warnings)



@pytest.mark.slow
async def test_block_construction_is_coexpanding_but_not_expanding(experiment_data):
    data = experiment_data("block-construction", {}, seed=8)
    await BlockConstructionExperiment().execute(data)

    results = data.results
    assert results["power"] is not None
    assert results["M_hat"][-1] > math.log(100) + math.log(20)
    assert results["cotangent_positive_3sigma"] is True
    assert results["tangent_flat_is_zero"] is True
    assert results["tangent_flat"]["value"] == 0.0
