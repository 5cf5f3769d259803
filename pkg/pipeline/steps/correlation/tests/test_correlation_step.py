"""
Test suite for the correlation experiments

Oracle: <phi, G^n phi> = J0(tau)^n for the unit-norm cosine of mode (1, 0)
under the phase-averaged Pierrehumbert model.

Run with:
    pytest pipeline/steps/correlation/tests/ -v
"""

import math

import numpy as np
import pytest
from scipy.special import j0

from pipeline.maps import PierrehumbertConfig, build_model
from pipeline.steps.correlation.main import CorrelationExperiment, MultipleMixingExperiment

J0_1 = j0(1.0)
UNIT_COSINE = {"cosine": [1, 0], "amplitude": math.sqrt(2.0)}


@pytest.fixture
def pierrehumbert():
    return build_model(PierrehumbertConfig(tau=1.0))


async def test_operator_series_matches_bessel_powers(pierrehumbert, experiment_data):
    data = experiment_data("correlation", {"phi": UNIT_COSINE, "n_max": 20}, model=pierrehumbert)
    await CorrelationExperiment().execute(data)

    values = data.results["series"]["values"]
    assert all(v == pytest.approx(J0_1 ** n, abs=1e-10) for n, v in enumerate(values))
    assert data.results["fit"]["theta_hat"] == pytest.approx(J0_1, rel=1e-8)
    assert data.results["fit"]["decaying"] is True
    assert data.table_name == "series"
    assert [row["n"] for row in data.table] == list(range(21))


async def test_monte_carlo_series_within_three_sigma(pierrehumbert, experiment_data):
    data = experiment_data(
        "correlation",
        {"phi": UNIT_COSINE, "n_max": 6, "method": "monte-carlo", "fit": False},
        model=pierrehumbert,
        seed=21,
        mc_samples=20_000,
        block_size=1024,
    )
    await CorrelationExperiment().execute(data)

    series = data.results["series"]
    assert "fit" not in data.results
    for n in range(7):
        assert abs(series["values"][n] - J0_1 ** n) <= 4.0 * series["stderr"][n] + 1e-12


async def test_psi_defaults_to_phi(pierrehumbert, experiment_data):
    explicit = experiment_data("correlation", {"phi": UNIT_COSINE, "psi": UNIT_COSINE, "n_max": 6}, model=pierrehumbert)
    implicit = experiment_data("correlation", {"phi": UNIT_COSINE, "n_max": 6}, model=pierrehumbert)
    await CorrelationExperiment().execute(explicit)
    await CorrelationExperiment().execute(implicit)
    assert explicit.results == implicit.results


async def test_non_decaying_series_is_warned(affine_model, experiment_data):
    model = affine_model({"T": (np.eye(2), (0.1, 0.0))})
    data = experiment_data("correlation", {"phi": UNIT_COSINE, "n_max": 12}, model=model)
    await CorrelationExperiment().execute(data)

    assert data.results["fit"]["decaying"] is False
    assert any("does not decay" in w for w in data.warnings)


async def test_multiple_mixing_rows(pierrehumbert, experiment_data):
    data = experiment_data(
        "multiple-mixing",
        {
            "phi0": {"cosine": [1, 0]},
            "phi1": {"cosine": [0, 1]},
            "phi2": {"cosine": [1, 1]},
            "lags": [[0, 0], [1, 2], [2, 4]],
            "K": 12,
        },
        model=pierrehumbert,
    )
    await MultipleMixingExperiment().execute(data)

    assert [(row["n1"], row["n2"]) for row in data.table] == [(0, 0), (1, 2), (2, 4)]
    assert data.results["method"] == "operator"
    assert data.results["max_modulus"] == max(row["modulus"] for row in data.table)
    assert data.table[0]["modulus"] == pytest.approx(0.25, abs=1e-12)


async def test_hyperbolic_series_stops_with_warning(cat_model, experiment_data):
    data = experiment_data("correlation", {"phi": UNIT_COSINE, "n_max": 60, "fit": False}, model=cat_model)
    await CorrelationExperiment().execute(data)

    series = data.results["series"]
    assert series["stopped_at"] == len(series["values"]) - 1 < 60
    assert len(data.table) == len(series["values"])
    assert any("stopped before n_max" in w for w in data.warnings)
