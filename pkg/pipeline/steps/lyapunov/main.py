"""Lyapunov spectrum along one random orbit, cross-checked against the Furstenberg integral."""

import math

import logfire
from scipy import stats

from pipeline.cocycle.main import LYAPUNOV_BATCHES, furstenberg_integral, lyapunov_spectrum
from pipeline.core.runner import BaseExperiment
from pipeline.models.core import ExperimentData

AGREEMENT_SIGMAS = 2.0


class LyapunovExperiment(BaseExperiment):
    def __init__(self):
        super().__init__(step_name="lyapunov")

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        report = lyapunov_spectrum(
            data.model,
            data.measure,
            p.T,
            x0=p.x0,
            seed=data.seed,
            period=p.period,
            block=data.budget.block_size,
        )
        if report.retried:
            data.add_warning("Lyapunov frame degenerated; reran with a shorter period", period=report.reorthonormalization_period)

        results = {"spectrum": report.model_dump(mode="json")}
        rows = [
            {"index": i, "exponent": value, "half_width_95": half}
            for i, (value, half) in enumerate(zip(report.exponents, report.confidence))
        ]

        if p.furstenberg_samples is not None:
            estimate = furstenberg_integral(
                data.model,
                data.measure,
                burn_in=p.furstenberg_burn_in or 0,
                samples=p.furstenberg_samples,
                seed=data.seed,
                chains=p.chains,
            )
            # confidence half-widths are Student-t 95% over the batch means
            top_stderr = report.confidence[0] / stats.t.ppf(0.975, LYAPUNOV_BATCHES - 1)
            combined = math.hypot(top_stderr, estimate.stderr)
            difference = abs(report.exponents[0] - estimate.value)
            agrees = difference <= AGREEMENT_SIGMAS * combined
            if not agrees:
                data.add_warning(
                    "Furstenberg integral disagrees with the top exponent",
                    difference=difference,
                    combined_stderr=combined,
                )
            logfire.info("Furstenberg cross-check", difference=difference, combined_stderr=combined)
            results["furstenberg"] = estimate.model_dump(mode="json")
            results["cross_check"] = {
                "difference": difference,
                "combined_stderr": combined,
                "agrees": agrees,
            }
            rows.append({"index": "furstenberg", "exponent": estimate.value, "stderr": estimate.stderr})

        data.results = results
        data.record_table(rows, name="table")
