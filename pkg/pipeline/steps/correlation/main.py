"""Annealed decay of correlations and multiple mixing."""

import logfire

from pipeline.core.runner import BaseExperiment
from pipeline.models.core import ExperimentData
from pipeline.stats.main import correlation_series, mixing_rate_fit, triple_correlation
from pipeline.stats.models import CorrelationMethod


class CorrelationExperiment(BaseExperiment):
    """Series <phi, G^n psi> for n = 0..n_max with an optional geometric rate fit; psi defaults to phi."""

    def __init__(self):
        super().__init__(step_name="correlation")

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        phi = p.phi.build()
        psi = p.psi.build() if p.psi is not None else phi
        series = correlation_series(data.model, data.measure, phi, psi, p.n_max, p.method, data.budget, p.K)
        if series.stopped_at is not None:
            data.add_warning("Correlation series stopped before n_max", horizon=series.stopped_at, n_max=p.n_max)
        if series.max_truncation_loss > 1e-3:
            data.add_warning("Galerkin truncation loss above tolerance", loss=series.max_truncation_loss)

        results = {"series": series.model_dump(mode="json")}
        if p.fit:
            fit = mixing_rate_fit(series)
            if fit.below_noise:
                data.add_warning("Correlation series below the noise floor; no rate fitted")
            elif not fit.decaying:
                data.add_warning("Correlation series does not decay", theta_hat=fit.theta_hat)
            results["fit"] = fit.model_dump(mode="json")

        data.results = results
        data.record_table(
            [
                {"n": n, "re": re, "im": im, "stderr": se}
                for n, (re, im, se) in enumerate(zip(series.values, series.imag, series.stderr))
            ],
            name="series",
        )


class MultipleMixingExperiment(BaseExperiment):
    def __init__(self):
        super().__init__(step_name="multiple-mixing")

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        phi0, phi1, phi2 = p.phi0.build(), p.phi1.build(), p.phi2.build()

        rows, fallbacks = [], 0
        for n1, n2 in p.lags:
            triple = triple_correlation(data.model, data.measure, phi0, phi1, phi2, n1, n2, data.budget, p.method, p.K)
            if triple.fell_back:
                fallbacks += 1
                data.add_warning("Operator triple correlation fell back to Monte Carlo", n1=n1, n2=n2)
            re, im = triple.value
            rows.append({
                "n1": n1,
                "n2": n2,
                "re": re,
                "im": im,
                "modulus": abs(complex(re, im)),
                "stderr": triple.stderr,
                "method": triple.method.value,
            })

        logfire.info("Triple correlations computed", lags=len(rows), fallbacks=fallbacks)
        data.results = {
            "triples": rows,
            "max_modulus": max(r["modulus"] for r in rows),
            "method": CorrelationMethod(p.method).value,
        }
        data.record_table(rows, name="table")
