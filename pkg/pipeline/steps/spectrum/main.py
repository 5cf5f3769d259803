"""Spectral experiments on Galerkin truncations of the averaged transfer operator."""

from typing import Any, Dict, List

import logfire

from pipeline.core.exceptions import ConfigurationError
from pipeline.core.runner import BaseExperiment
from pipeline.maps.main import build_model
from pipeline.maps.systems import PierrehumbertModel
from pipeline.measure.main import dd_distance
from pipeline.measure.models import SamplingGrid
from pipeline.models.core import ExperimentData
from pipeline.spectral.main import (
    FamilyMember,
    build_galerkin,
    essential_radius_estimate,
    k_sweep,
    lasota_yorke_fit,
    operator_spectrum,
    pierrehumbert_stability_sweep,
    require_galerkin_fit,
    stability_sweep,
)
from pipeline.spectral.models import SpectralReport, StabilityReport


def _eigenvalue_rows(report: SpectralReport) -> List[Dict[str, Any]]:
    return [
        {"rank": i, "re": re, "im": im, "modulus": abs(complex(re, im))}
        for i, (re, im) in enumerate(report.eigenvalues)
    ]


class SpectrumExperiment(BaseExperiment):
    """Eigenvalues at one K, with the non-ergodicity and weak-mixing flags and an optional K sweep."""

    def __init__(self):
        super().__init__(step_name="spectrum")

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        op = build_galerkin(data.model, data.measure, p.K, p.s)
        if not require_galerkin_fit(op, p.truncation_tolerance):
            data.add_warning("Galerkin truncation loss above tolerance", loss=op.max_truncation_loss, tolerance=p.truncation_tolerance)

        report = operator_spectrum(op, p.s)
        if report.diagnostic:
            data.add_warning("Eigen-solve incomplete", diagnostic=report.diagnostic)
        if report.weak_mixing_violation:
            data.add_warning("Non-constant eigenvalues on the unit circle", count=report.peripheral_count)

        results: Dict[str, Any] = {"spectrum": report.model_dump(mode="json")}
        if p.k_sweep:
            sweep = k_sweep(data.model, data.measure, p.k_sweep, p.s)
            if sweep["non_cauchy"]:
                data.add_warning("Subleading modulus does not settle across the K sweep", K=p.k_sweep)
            results["k_sweep"] = sweep

        data.results = results
        data.record_table(_eigenvalue_rows(report), name="table")


class EssentialRadiusExperiment(BaseExperiment):
    def __init__(self):
        super().__init__(step_name="essential-radius")

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        estimate = essential_radius_estimate(data.model, data.measure, p.s, p.r, p.n_max, p.witnesses, data.budget)
        gapless = estimate.eta_hat >= 1.0 - 1e-12
        if gapless:
            data.add_warning("No high-frequency decay; flagged gapless", eta_hat=estimate.eta_hat)
        data.results = {"estimate": estimate.model_dump(mode="json"), "gapless": gapless}

        rows = []
        for n, log_rho in enumerate(estimate.log_rho_max, start=1):
            row = {"n": n, "log_rho_max": log_rho}
            if estimate.covector_bound:
                row["covector_bound"] = estimate.covector_bound[n - 1]
            rows.append(row)
        data.record_table(rows, name="table")


class LasotaYorkeExperiment(BaseExperiment):
    def __init__(self):
        super().__init__(step_name="lasota-yorke")

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        report = lasota_yorke_fit(
            data.model,
            data.measure,
            p.s,
            p.s_bar,
            p.n_list,
            witnesses=p.witnesses,
            eta=p.eta,
            r=p.r,
            budget=data.budget,
        )
        if report.gapless:
            data.add_warning("Lasota-Yorke inequality infeasible; flagged gapless", eta=report.eta)
        data.results = {"lasota_yorke": report.model_dump(mode="json")}
        data.record_table([{"n": n, "C_n": c} for n, c in sorted(report.constants.items())], name="table")


class StabilityExperiment(BaseExperiment):
    """Subleading eigenvalue under perturbation: a phase-discretization sweep or explicit measures."""

    def __init__(self):
        super().__init__(step_name="stability")

    async def _validate_input(self, data: ExperimentData):
        if data.parameters.phase_denominators is not None and not isinstance(data.model, PierrehumbertModel):
            return "phase_denominators needs the pierrehumbert model"
        return None

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        if p.phase_denominators is not None:
            report = pierrehumbert_stability_sweep(data.model.tau, p.phase_denominators, p.K, p.s)
        else:
            family = []
            for member in p.members:
                measure = member.measure.build()
                for map_id in measure.map_ids():
                    data.model.resolve(map_id)
                family.append(FamilyMember(label=member.label, model=data.model, measure=measure, parameter=member.parameter))
            report = stability_sweep(data.model, data.measure, family, p.K, p.s)

        data.results = {"stability": report.model_dump(mode="json"), **self._monotone(report)}
        data.record_table(
            [
                {
                    "label": m.label,
                    "parameter": m.parameter,
                    "subleading_modulus": m.subleading_modulus,
                    "deviation": m.deviation,
                    "modulus_deviation": m.modulus_deviation,
                    "dd": m.dd,
                }
                for m in [report.base, *report.members]
            ],
            name="table",
        )

    @staticmethod
    def _monotone(report: StabilityReport) -> Dict[str, Any]:
        deviations = [m.deviation for m in report.members]
        known = [d for d in deviations if d is not None]
        decreasing = all(b <= a + 1e-12 for a, b in zip(known, known[1:]))
        return {"deviation_decreasing": decreasing, "final_deviation": known[-1] if known else None}


class DdDistanceExperiment(BaseExperiment):
    def __init__(self):
        super().__init__(step_name="dd-distance")

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        model_tilde = build_model(p.model_tilde) if p.model_tilde is not None else data.model
        measure_tilde = p.measure_tilde.build()
        for map_id in measure_tilde.map_ids():
            model_tilde.resolve(map_id)
        if model_tilde.state_dimension != data.model.state_dimension:
            raise ConfigurationError("model_tilde lives on a torus of another dimension", key="parameters.model_tilde")

        grid = SamplingGrid(points_per_axis=p.points_per_axis, dimension=data.model.state_dimension)
        value = dd_distance(data.measure, measure_tilde, grid, data.model, model_tilde)
        logfire.info("dd distance computed", dd=value, grid_points=p.points_per_axis)
        data.results = {"dd": value, "points_per_axis": p.points_per_axis}
        data.record_table([{"dd": value, "points_per_axis": p.points_per_axis}], name="table")
