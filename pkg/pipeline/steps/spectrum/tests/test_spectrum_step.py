"""
Test suite for the spectral experiments

Oracles: the diagonal Bessel spectrum of the phase-averaged Pierrehumbert
operator and lattice counting for rational translations.

Run with:
    pytest pipeline/steps/spectrum/tests/ -v
"""

import numpy as np
import pytest
from scipy.special import j0

from pipeline.core.exceptions import ExperimentExecutionError
from pipeline.maps import PierrehumbertConfig, RationalTranslationConfig, build_model
from pipeline.measure import DrivingMeasure
from pipeline.steps.spectrum.main import (
    DdDistanceExperiment,
    EssentialRadiusExperiment,
    LasotaYorkeExperiment,
    SpectrumExperiment,
    StabilityExperiment,
)

J0_1 = j0(1.0)


@pytest.fixture
def pierrehumbert():
    return build_model(PierrehumbertConfig(tau=1.0))


@pytest.fixture
def zariski_pair(affine_model):
    return affine_model({
        "U": (np.array([[1.0, 2.0], [0.0, 1.0]]), None),
        "L": (np.array([[1.0, 0.0], [2.0, 1.0]]), None),
    })


@pytest.fixture
def translation(affine_model):
    return affine_model({"T": (np.eye(2), (0.5, 0.25))})


# ===================================================================
# spectrum
# ===================================================================

async def test_pierrehumbert_subleading_modulus(pierrehumbert, experiment_data):
    data = experiment_data("spectrum", {"K": 4}, model=pierrehumbert)
    await SpectrumExperiment().execute(data)

    spectrum = data.results["spectrum"]
    assert spectrum["subleading_modulus"] == pytest.approx(J0_1, abs=1e-8)
    assert spectrum["peripheral_count"] == 0
    assert len(data.table) == 81
    assert data.table[0]["modulus"] == pytest.approx(1.0)
    assert data.warnings == []


async def test_k_sweep_is_attached(pierrehumbert, experiment_data):
    data = experiment_data("spectrum", {"K": 2, "k_sweep": [2, 3, 4]}, model=pierrehumbert)
    await SpectrumExperiment().execute(data)

    sweep = data.results["k_sweep"]
    assert sweep["K"] == [2, 3, 4]
    assert all(m == pytest.approx(J0_1, abs=1e-8) for m in sweep["subleading_modulus"])


async def test_rational_translation_is_flagged(experiment_data):
    model = build_model(RationalTranslationConfig(denominator=4))
    data = experiment_data("spectrum", {"K": 4}, model=model)
    await SpectrumExperiment().execute(data)

    # modes with 4 | k1 and 4 | k2 inside |k| <= 4: three values per axis
    assert data.results["spectrum"]["unit_multiplicity"] == 9
    assert data.results["spectrum"]["weak_mixing_violation"] is True
    assert any("unit circle" in w for w in data.warnings)


# ===================================================================
# essential-radius and lasota-yorke
# ===================================================================

async def test_zariski_pair_has_high_frequency_decay(zariski_pair, experiment_data):
    data = experiment_data("essential-radius", {"s": 0.05, "r": 3.0, "n_max": 10}, model=zariski_pair)
    await EssentialRadiusExperiment().execute(data)

    assert data.results["estimate"]["eta_hat"] < 1.0
    assert data.results["gapless"] is False
    assert [row["n"] for row in data.table] == list(range(1, 11))
    assert "covector_bound" in data.table[0]


async def test_translation_control_is_gapless(translation, experiment_data):
    data = experiment_data("essential-radius", {"s": 0.05, "r": 4.0, "n_max": 6}, model=translation)
    await EssentialRadiusExperiment().execute(data)

    assert data.results["estimate"]["eta_hat"] == pytest.approx(1.0, abs=1e-12)
    assert data.results["gapless"] is True
    assert any("gapless" in w for w in data.warnings)


async def test_lasota_yorke_constants(zariski_pair, experiment_data):
    data = experiment_data(
        "lasota-yorke", {"s": 0.05, "s_bar": 0.55, "n_list": [1, 2, 4, 8], "r": 4.0}, model=zariski_pair
    )
    await LasotaYorkeExperiment().execute(data)

    report = data.results["lasota_yorke"]
    assert report["feasible"] is True
    assert report["eta"] < 1.0
    assert [row["n"] for row in data.table] == [1, 2, 4, 8]
    assert all(row["C_n"] >= 0.0 for row in data.table)


# ===================================================================
# stability
# ===================================================================

async def test_phase_discretization_converges(pierrehumbert, experiment_data):
    data = experiment_data("stability", {"K": 4, "phase_denominators": [4, 8, 16]}, model=pierrehumbert)
    await StabilityExperiment().execute(data)

    assert data.results["deviation_decreasing"] is True
    assert data.results["final_deviation"] <= 1e-3
    assert [row["label"] for row in data.table] == ["base", "Q=4", "Q=8", "Q=16"]


async def test_phase_denominators_need_pierrehumbert(cat_model, experiment_data):
    data = experiment_data("stability", {"K": 2, "phase_denominators": [4]}, model=cat_model)
    with pytest.raises(ExperimentExecutionError, match="pierrehumbert"):
        await StabilityExperiment().execute(data)


async def test_explicit_members(affine_model, experiment_data):
    cat = np.array([[2.0, 1.0], [1.0, 1.0]])
    model = affine_model({"A": (cat, None), "B": (cat, (0.1, 0.0))})
    data = experiment_data(
        "stability",
        {"K": 2, "members": [{"label": "shifted", "measure": {"kind": "finite-atoms", "atoms": [{"map": "B", "weight": 1.0}]}, "parameter": 0.1}]},
        model=model,
        measure=DrivingMeasure.dirac("A"),
    )
    await StabilityExperiment().execute(data)

    members = data.results["stability"]["members"]
    assert len(members) == 1
    assert members[0]["dd"] is not None and members[0]["dd"] > 0.0


# ===================================================================
# dd-distance
# ===================================================================

async def test_dd_distance_zero_for_identical_measures(translation, experiment_data):
    data = experiment_data(
        "dd-distance",
        {"measure_tilde": {"kind": "finite-atoms", "atoms": [{"map": "T", "weight": 1.0}]}, "points_per_axis": 8},
        model=translation,
    )
    await DdDistanceExperiment().execute(data)
    assert data.results["dd"] == pytest.approx(0.0, abs=1e-12)


async def test_dd_distance_against_another_model(translation, experiment_data):
    data = experiment_data(
        "dd-distance",
        {
            "measure_tilde": {"kind": "finite-atoms", "atoms": [{"map": "S", "weight": 1.0}]},
            "model_tilde": {"variant": "affine-torus", "maps": [{"id": "S", "matrix": [[1, 0], [0, 1]], "offset": [0.5, 0.3]}]},
            "points_per_axis": 8,
        },
        model=translation,
    )
    await DdDistanceExperiment().execute(data)
    assert data.results["dd"] > 0.0
    assert data.table == [{"dd": data.results["dd"], "points_per_axis": 8}]
