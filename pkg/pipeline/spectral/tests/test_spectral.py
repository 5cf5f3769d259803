"""
Test suite for the spectral module

Oracles: the affine mode pushforward checked by grid quadrature, Bessel
values from scipy.special, lattice-point counting for the non-ergodic
models and closed-form iteration of A^T on Z^2.

Run with:
    pytest pipeline/spectral/tests/test_spectral.py -v
"""

import numpy as np
import pytest
from scipy.special import j0

from pipeline.cocycle import CocycleBudget
from pipeline.core.exceptions import BudgetExceededError, ConfigurationError, UnsupportedModelError
from pipeline.maps import (
    LinearCocycleConfig,
    PierrehumbertConfig,
    StandardMapConfig,
    build_model,
    factoring_block_model,
    lift_product,
    rational_translation_model,
)
from pipeline.measure import DrivingMeasure, MapAtom, MeasureKind, transform_measure
from pipeline.spectral import (
    FamilyMember,
    ModeIndex,
    build_galerkin,
    essential_radius_estimate,
    k_sweep,
    lasota_yorke_fit,
    operator_spectrum,
    pierrehumbert_stability_sweep,
    stability_sweep,
)

S = np.array([[1.0, 1.0], [0.0, 1.0]])
ZARISKI_PAIR = (np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([[1.0, 0.0], [2.0, 1.0]]))
J0_1 = 0.7651976865579666


def _entry(op, row, col):
    index = op.index
    return op.matrix[index.index_of(np.array([row]))[0], index.index_of(np.array([col]))[0]]


def _column(op, col):
    j = op.index.index_of(np.array([col]))[0]
    return op.matrix[:, j].toarray().ravel()


@pytest.fixture
def pierrehumbert():
    return build_model(PierrehumbertConfig(tau=1.0))


@pytest.fixture
def zariski(affine_model):
    return affine_model({"a": (ZARISKI_PAIR[0], None), "b": (ZARISKI_PAIR[1], None)})


# ============================================================================
# MODE INDEX
# ============================================================================

def test_mode_index_round_trip():
    index = ModeIndex(d=3, K=2)
    assert index.size == 125
    assert np.array_equal(index.index_of(index.modes), np.arange(125))
    assert np.array_equal(index.modes[index.zero], [0, 0, 0])
    assert index.index_of(np.array([[3, 0, 0]]))[0] == -1


def test_mode_index_rejects_empty_box():
    with pytest.raises(ConfigurationError):
        ModeIndex(d=2, K=0)


# ============================================================================
# build_galerkin
# ============================================================================

def test_shear_column_single_unit_entry(affine_model):
    model = affine_model({"S": (S, None)})
    op = build_galerkin(model, DrivingMeasure.dirac("S"), K=3)

    column = _column(op, (1, 0))
    assert np.count_nonzero(column) == 1
    assert _entry(op, (1, 1), (1, 0)) == pytest.approx(1.0, abs=1e-15)


def test_offset_phase_is_minus_one(affine_model):
    model = affine_model({"S": (S, (0.5, 0.0))})
    op = build_galerkin(model, DrivingMeasure.dirac("S"), K=3)
    assert _entry(op, (1, 1), (1, 0)) == pytest.approx(-1.0, abs=1e-14)


def test_affine_entries_match_quadrature(affine_model):
    b = np.array([0.3, 0.1])
    model = affine_model({"S": (S, tuple(b)), "T": (S.T, (0.0, 0.25))})
    mu = DrivingMeasure.finite([("S", 0.4), ("T", 0.6)])
    op = build_galerkin(model, mu, K=2)

    n = 32
    grid = np.stack(np.meshgrid(np.arange(n) / n, np.arange(n) / n, indexing="ij"), axis=-1).reshape(-1, 2)
    dense = op.dense()
    for col, k in enumerate(op.index.modes):
        composed = 0.4 * np.exp(2j * np.pi * ((grid @ S.T + b) @ k)) + 0.6 * np.exp(
            2j * np.pi * ((grid @ S + np.array([0.0, 0.25])) @ k)
        )
        for row, m in enumerate(op.index.modes):
            expected = np.mean(composed * np.exp(-2j * np.pi * (grid @ m)))
            assert abs(dense[row, col] - expected) < 1e-10


def test_pierrehumbert_diagonal_matches_bessel(pierrehumbert):
    op = build_galerkin(pierrehumbert, pierrehumbert.default_measure, K=8)
    dense = op.dense()

    assert np.count_nonzero(dense - np.diag(np.diag(dense))) == 0
    assert _entry(op, (1, 0), (1, 0)).real == pytest.approx(0.7651977, abs=1e-7)
    expected = j0(op.index.modes[:, 0] * 1.0) * j0(op.index.modes[:, 1] * 1.0)
    np.testing.assert_allclose(np.diag(dense).real, expected, atol=1e-8)
    assert op.max_truncation_loss < 1e-12


def test_pierrehumbert_half_tau_entry():
    model = build_model(PierrehumbertConfig(tau=0.5))
    op = build_galerkin(model, model.default_measure, K=8)
    value = _entry(op, (2, 3), (2, 3)).real
    assert value == pytest.approx(j0(1.0) * j0(1.5), abs=1e-12)
    assert value == pytest.approx(0.391647, abs=1e-6)


def test_discrete_phase_column_matches_quadrature(pierrehumbert):
    q, tau, k = 3, 1.0, (2, 1)
    atoms = tuple(MapAtom(map_id="H", weight=1.0 / 3, phase=j / q) for j in range(q))
    mu = DrivingMeasure(kind=MeasureKind.FINITE, atoms=atoms)
    op = build_galerkin(pierrehumbert, mu, K=8)

    y = np.arange(512) / 512
    for shift in range(-6, 7):
        expected = np.mean(
            sum(
                np.exp(1j * k[0] * tau * np.sin(2 * np.pi * (y + j / q))) / q
                for j in range(q)
            ) * np.exp(-2j * np.pi * shift * y)
        )
        got = _entry(op, (k[0], k[1] + shift), k)
        assert abs(got - expected) < 1e-12


def test_constant_column_is_indicator(affine_model, pierrehumbert):
    model = affine_model({"S": (S, (0.2, 0.7)), "T": (S.T, None)})
    operators = [
        build_galerkin(model, DrivingMeasure.uniform(["S", "T"]), K=4),
        build_galerkin(pierrehumbert, pierrehumbert.default_measure, K=4),
        build_galerkin(rational_translation_model(3), rational_translation_model(3).default_measure, K=4),
    ]
    for op in operators:
        column = _column(op, (0, 0))
        expected = np.zeros(op.index.size)
        expected[op.index.zero] = 1.0
        np.testing.assert_allclose(column, expected, atol=1e-14)


def test_adjoint_law(affine_model):
    model = affine_model({"S": (S, (0.2, 0.7)), "T": (S.T, (0.5, 0.1))})
    mu = DrivingMeasure.finite([("S", 0.3), ("T", 0.7)])
    forward = build_galerkin(model, mu, K=4).dense()
    backward = build_galerkin(model, transform_measure(mu, "inverse"), K=4).dense()
    np.testing.assert_allclose(forward, backward.conj().T, atol=1e-10)


def test_spectral_radius_is_contractive(zariski):
    report = operator_spectrum(build_galerkin(zariski, zariski.default_measure, K=6))
    moduli = [abs(complex(*v)) for v in report.eigenvalues]
    assert max(moduli) <= 1.0 + 1e-8


def test_product_lift_pushes_blockwise(affine_model):
    model = lift_product(affine_model({"S": (S, None)}), 2)
    op = build_galerkin(model, DrivingMeasure.dirac("S"), K=2)
    assert _entry(op, (1, 1, 0, 1), (1, 0, 0, 1)) == pytest.approx(1.0)


def test_truncation_loss_counts_escaping_modes(affine_model):
    model = affine_model({"S": (S, None)})
    op = build_galerkin(model, DrivingMeasure.dirac("S"), K=2)
    j = op.index.index_of(np.array([(2, 1)]))[0]
    assert op.truncation_loss[j] == pytest.approx(1.0)
    assert op.truncation_loss[op.index.zero] == 0.0


def test_unsupported_models_rejected():
    standard = build_model(StandardMapConfig(kick_strength=1.0, noise_half_width=0.1))
    cocycle = build_model(LinearCocycleConfig(matrices=[{"id": "A", "matrix": [[2, 1], [1, 1]]}]))
    for model in (standard, cocycle):
        with pytest.raises(UnsupportedModelError):
            build_galerkin(model, model.default_measure, K=2)


def test_galerkin_memory_budget(pierrehumbert):
    with pytest.raises(BudgetExceededError, match="galerkin modes"):
        build_galerkin(pierrehumbert, pierrehumbert.default_measure, K=71)


# ============================================================================
# operator_spectrum
# ============================================================================

def test_pierrehumbert_spectrum_is_the_diagonal(pierrehumbert):
    op = build_galerkin(pierrehumbert, pierrehumbert.default_measure, K=16)
    report = operator_spectrum(op)

    diagonal = np.sort(np.abs(op.dense().diagonal()))[::-1]
    moduli = np.array([abs(complex(*v)) for v in report.eigenvalues])
    np.testing.assert_allclose(moduli, diagonal, atol=1e-12)
    assert report.subleading_modulus == pytest.approx(J0_1, abs=1e-8)
    assert report.unit_multiplicity == 1


@pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
def test_weak_mixing_detector_quiet_on_pierrehumbert(tau):
    model = build_model(PierrehumbertConfig(tau=tau))
    report = operator_spectrum(build_galerkin(model, model.default_measure, K=16))
    assert not report.weak_mixing_violation
    expected = max(
        abs(j0(k1 * tau) * j0(k2 * tau))
        for k1 in range(-16, 17) for k2 in range(-16, 17) if (k1, k2) != (0, 0)
    )
    assert report.subleading_modulus == pytest.approx(expected, abs=1e-8)


def test_rational_translations_not_ergodic():
    model = rational_translation_model(4)
    report = operator_spectrum(build_galerkin(model, model.default_measure, K=8))
    # modes with 4 | k1 and 4 | k2 in [-8, 8]^2: 5 x 5
    assert report.unit_multiplicity == 25
    assert report.weak_mixing_violation


def test_factoring_block_model_fixes_second_factor():
    model = factoring_block_model()
    report = operator_spectrum(build_galerkin(model, model.default_measure, K=4))
    assert report.unit_multiplicity == 81
    assert report.weak_mixing_violation


def test_weighting_does_not_move_eigenvalues(zariski):
    op = build_galerkin(zariski, zariski.default_measure, K=5)
    plain = operator_spectrum(op, 0.0)
    weighted = operator_spectrum(op, -0.5)
    assert weighted.subleading_modulus == pytest.approx(plain.subleading_modulus, abs=1e-6)


def test_k_sweep_on_diagonal_model_is_cauchy(pierrehumbert):
    sweep = k_sweep(pierrehumbert, pierrehumbert.default_measure, [4, 8, 12])
    assert not sweep["non_cauchy"]
    assert all(m == pytest.approx(J0_1, abs=1e-12) for m in sweep["subleading_modulus"])


# ============================================================================
# essential_radius_estimate / lasota_yorke_fit
# ============================================================================

def test_translation_has_no_decay(affine_model):
    model = affine_model({"T": (np.eye(2), (0.3, 0.6))})
    estimate = essential_radius_estimate(model, DrivingMeasure.dirac("T"), s=0.1, r=3.0, n_max=6)
    assert estimate.eta_hat == pytest.approx(1.0, abs=1e-12)
    assert all(v == pytest.approx(1.0, abs=1e-12) for series in estimate.rho.values() for v in series)


def test_cat_map_ratios_closed_form(cat_model, cat_matrix):
    s, k = 0.1, np.array([3, 1])
    estimate = essential_radius_estimate(cat_model, DrivingMeasure.dirac("A"), s=s, r=2.0, n_max=5, witnesses=[k])
    pushed = k.astype(float)
    for n in range(5):
        pushed = pushed @ cat_matrix
        expected = ((1 + pushed @ pushed) / (1 + k @ k)) ** (-s / 2)
        assert estimate.rho["3,1"][n] == pytest.approx(expected, rel=1e-12)


def test_zariski_pair_has_high_frequency_decay(zariski):
    estimate = essential_radius_estimate(zariski, zariski.default_measure, s=0.05, r=3.0, n_max=10)
    assert estimate.eta_hat < 1.0
    assert estimate.exact
    assert len(estimate.covector_bound) == 10
    assert estimate.covector_eta < 1.0


def test_pierrehumbert_ratios_are_bessel_powers(pierrehumbert):
    estimate = essential_radius_estimate(
        pierrehumbert, pierrehumbert.default_measure, s=0.1, r=2.0, n_max=4, witnesses=[(3, 1)]
    )
    base = abs(j0(3.0) * j0(1.0))
    for n, value in enumerate(estimate.rho["3,1"], start=1):
        assert value == pytest.approx(base ** n, rel=1e-10)
    assert estimate.eta_hat == pytest.approx(base, rel=1e-8)


def test_essential_radius_errors(zariski):
    with pytest.raises(ConfigurationError, match="empty"):
        essential_radius_estimate(zariski, zariski.default_measure, s=0.05, r=5.0, n_max=4, witnesses=[(1, 0)])
    with pytest.raises(BudgetExceededError):
        essential_radius_estimate(
            zariski, zariski.default_measure, s=0.05, r=3.0, n_max=8, budget=CocycleBudget(word_cap=100)
        )
    with pytest.raises(ConfigurationError):
        essential_radius_estimate(zariski, zariski.default_measure, s=0.0, r=3.0, n_max=4)


def test_lasota_yorke_translation_is_gapless(affine_model):
    model = affine_model({"T": (np.eye(2), (0.3, 0.6))})
    report = lasota_yorke_fit(model, DrivingMeasure.dirac("T"), s=0.05, s_bar=0.55, n_list=[1, 2, 4])
    assert report.gapless
    assert not report.feasible
    assert all(c == pytest.approx(0.0, abs=1e-12) for c in report.constants.values())


def test_lasota_yorke_zariski_pair_feasible(zariski):
    report = lasota_yorke_fit(zariski, zariski.default_measure, s=0.05, s_bar=0.55, n_list=range(1, 9))
    assert report.feasible
    assert report.eta < 1.0
    assert sorted(report.constants) == list(range(1, 9))
    assert all(np.isfinite(c) and c >= 0.0 for c in report.constants.values())


def test_lasota_yorke_rejects_inverted_indices(zariski):
    with pytest.raises(ConfigurationError):
        lasota_yorke_fit(zariski, zariski.default_measure, s=0.5, s_bar=0.1, n_list=[1])


# ============================================================================
# stability_sweep
# ============================================================================

def test_base_against_itself(pierrehumbert):
    member = FamilyMember(label="self", model=pierrehumbert, measure=pierrehumbert.default_measure)
    report = stability_sweep(pierrehumbert, pierrehumbert.default_measure, [member], K=8)
    assert report.members[0].deviation == 0.0
    assert report.members[0].dd == 0.0


def test_phase_discretization_converges():
    report = pierrehumbert_stability_sweep(1.0, [2, 32], K=16)
    base = report.base.subleading_modulus
    assert base == pytest.approx(J0_1, abs=1e-8)
    coarse, fine = report.members
    assert fine.deviation < 1e-3
    assert coarse.deviation >= fine.deviation
    assert fine.dd is None


@pytest.mark.slow
def test_phase_discretization_sweep_full():
    report = pierrehumbert_stability_sweep(1.0, [2, 3, 4, 6, 8, 16, 32], K=16)
    deviations = [m.deviation for m in report.members]
    assert deviations[-1] < 1e-3
    assert deviations[-1] <= deviations[0]


def test_mismatched_family_k_rejected(pierrehumbert):
    prebuilt = build_galerkin(pierrehumbert, pierrehumbert.default_measure, K=4)
    member = FamilyMember(label="x", model=pierrehumbert, measure=pierrehumbert.default_measure, operator=prebuilt)
    with pytest.raises(ConfigurationError, match="K=4"):
        stability_sweep(pierrehumbert, pierrehumbert.default_measure, [member], K=8)


def test_finite_family_reports_dd(affine_model):
    model = affine_model({"p": (np.eye(2), (0.1, 0.0)), "q": (np.eye(2), (0.0, 0.3))})
    base = DrivingMeasure.finite([("p", 0.5), ("q", 0.5)])
    member = FamilyMember(label="tilt", model=model, measure=DrivingMeasure.finite([("p", 0.6), ("q", 0.4)]))
    report = stability_sweep(model, base, [member], K=4)
    assert report.members[0].dd is not None
    assert report.members[0].dd >= 0.0
