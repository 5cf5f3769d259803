"""
Experiment runner factory.

This module provides create_experiment_runner() which instantiates every
experiment step and registers it under its config key.
"""

from pipeline.core.runner import ExperimentRunner


def create_experiment_runner() -> ExperimentRunner:
    """
    Factory function to create a runner with every experiment registered.

    Returns:
        ExperimentRunner keyed by the ``experiment`` names of schemas.experiment

    Example:
        ```python
        from pipeline import create_experiment_runner
        from utils.config_loader import load_experiment

        config, data = load_experiment("configs/pierrehumbert_spectrum.toml")
        runner = create_experiment_runner()
        await runner.run(data)
        print(data.results["spectrum"]["subleading_modulus"])
        ```
    """
    # Import step classes lazily to avoid circular dependencies at package import time
    from pipeline.steps.clt.main import BerryEsseenExperiment, CLTExperiment
    from pipeline.steps.correlation.main import CorrelationExperiment, MultipleMixingExperiment
    from pipeline.steps.expansion.main import (
        BlockConstructionExperiment,
        ConormalExperiment,
        ExpansionExperiment,
    )
    from pipeline.steps.lyapunov.main import LyapunovExperiment
    from pipeline.steps.spectrum.main import (
        DdDistanceExperiment,
        EssentialRadiusExperiment,
        LasotaYorkeExperiment,
        SpectrumExperiment,
        StabilityExperiment,
    )

    return ExperimentRunner([
        ExpansionExperiment(),
        LyapunovExperiment(),
        SpectrumExperiment(),
        EssentialRadiusExperiment(),
        LasotaYorkeExperiment(),
        StabilityExperiment(),
        CorrelationExperiment(),
        MultipleMixingExperiment(),
        CLTExperiment(),
        BerryEsseenExperiment(),
        DdDistanceExperiment(),
        ConormalExperiment(),
        BlockConstructionExperiment(),
    ])
