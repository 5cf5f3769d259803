"""Central limit experiments: one horizon against the Green-Kubo Gaussian, and the Berry-Esseen scaling table."""

from pipeline.core.runner import BaseExperiment
from pipeline.models.core import ExperimentData
from pipeline.stats.main import berry_esseen_scaling, clt_experiment


class CLTExperiment(BaseExperiment):
    def __init__(self):
        super().__init__(step_name="clt")

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        report = clt_experiment(
            data.model,
            data.measure,
            p.phi.build(),
            p.N,
            p.trials,
            seed=data.seed,
            threads=data.threads,
            block_size=data.budget.block_size,
            sigma2_gk=p.sigma2_gk,
            gk_n_max=p.gk_n_max,
            K=p.K,
        )
        if report.diagnostic:
            data.add_warning("CLT reference variance", diagnostic=report.diagnostic, reference=report.reference)

        relative_gap = None
        if report.sigma2_gk:
            relative_gap = abs(report.sigma2_mc - report.sigma2_gk) / report.sigma2_gk
        data.results = {"clt": report.model_dump(mode="json"), "variance_relative_gap": relative_gap}
        data.record_table(
            [{
                "N": report.N,
                "trials": report.trials,
                "sigma2_gk": report.sigma2_gk,
                "sigma2_mc": report.sigma2_mc,
                "ks_distance": report.ks_distance,
                "reference": report.reference,
            }],
            name="table",
        )


class BerryEsseenExperiment(BaseExperiment):
    def __init__(self):
        super().__init__(step_name="berry-esseen")

    def _run(self, data: ExperimentData) -> None:
        p = data.parameters
        table = berry_esseen_scaling(
            data.model,
            data.measure,
            p.phi.build(),
            p.N_list,
            p.trials,
            seed=data.seed,
            threads=data.threads,
            block_size=data.budget.block_size,
            sigma2_gk=p.sigma2_gk,
            gk_n_max=p.gk_n_max,
            K=p.K,
        )
        if table.growth_detected:
            data.add_warning("sqrt(N) x KS grows with N", tau=table.trend_tau, pvalue=table.trend_pvalue)
        if table.reference == "empirical":
            data.add_warning("No Green-Kubo variance; KS measured against the empirical variance")

        data.results = {"berry_esseen": table.model_dump(mode="json")}
        data.record_table([row.model_dump(mode="json") for row in table.rows], name="table")
