"""
Core experiment infrastructure - base classes for all experiments.

BaseExperiment: Abstract base class for experiment steps
ExperimentRunner: Dispatches a run to the registered experiment
"""

import asyncio
import time
from abc import ABC, abstractmethod
from typing import Dict, List, Optional

import logfire

from pipeline.core.exceptions import ConfigurationError, ExperimentExecutionError
from pipeline.models.core import ExperimentData, ExperimentResult


class BaseExperiment(ABC):
    """
    Abstract base class for all experiments.

    Each experiment must implement:
    - _run(): Core numerics (synchronous, CPU-bound)
    - Optionally: _validate_input(): Input validation

    The execute() method wraps the numerics with:
    - Logfire observability spans
    - Error handling and logging
    - Timing metrics
    - Off-loop execution (asyncio.to_thread) so suites can overlap runs
    """

    def __init__(self, step_name: str):
        """
        Initialize experiment.

        Args:
            step_name: Experiment key as it appears in configs (used in logs)
        """
        self.step_name = step_name

    async def execute(self, data: ExperimentData) -> ExperimentResult:
        """
        Execute the experiment with full observability.

        Args:
            data: Run state (results, table and warnings are filled in-place)

        Returns:
            ExperimentResult indicating success

        Raises:
            ExperimentExecutionError: If the experiment fails
        """
        start_time = time.perf_counter()

        with logfire.span(
            f"experiment.{self.step_name}",
            run_id=data.run_id,
            config_hash=data.config_hash,
            seed=data.seed,
        ):
            try:
                logfire.info(f"{self.step_name} started", run_id=data.run_id, threads=data.threads)

                validation_error = await self._validate_input(data)
                if validation_error:
                    raise ConfigurationError(f"Input validation failed: {validation_error}")

                await asyncio.to_thread(self._run, data)

                duration = time.perf_counter() - start_time
                data.add_timing(self.step_name, duration)

                logfire.info(
                    f"{self.step_name} completed",
                    run_id=data.run_id,
                    duration=duration,
                    warnings=len(data.warnings),
                )
                return ExperimentResult(
                    success=True,
                    step_name=self.step_name,
                    metadata={"duration": duration},
                    warnings=list(data.warnings),
                )

            except Exception as e:
                duration = time.perf_counter() - start_time
                logfire.error(
                    f"{self.step_name} failed",
                    run_id=data.run_id,
                    error=str(e),
                    error_type=type(e).__name__,
                    duration=duration,
                    exc_info=True,
                )
                data.add_error(self.step_name, str(e))
                raise ExperimentExecutionError(self.step_name, e) from e

    async def _validate_input(self, data: ExperimentData) -> Optional[str]:
        """
        Check prerequisites (model present, dimensions agree ...).

        Returns:
            Error message if validation fails, None if valid
        """
        return None

    @abstractmethod
    def _run(self, data: ExperimentData) -> None:
        """
        Run the numerics and store results, table and warnings on ``data``.

        MUST BE IMPLEMENTED by each experiment.
        """
        pass


class ExperimentRunner:
    """
    Registry of experiments keyed by their config name.

    A run executes exactly one experiment; inner parallelism belongs to the
    compute modules.
    """

    def __init__(self, experiments: Optional[List[BaseExperiment]] = None):
        self.experiments: Dict[str, BaseExperiment] = {}
        for experiment in experiments or []:
            self.register(experiment)

    def register(self, experiment: BaseExperiment) -> None:
        self.experiments[experiment.step_name] = experiment

    @property
    def names(self) -> List[str]:
        return sorted(self.experiments)

    async def run(self, data: ExperimentData) -> ExperimentResult:
        """
        Run the experiment named by ``data.experiment``.

        Raises:
            ConfigurationError: Unknown experiment key
            ExperimentExecutionError: If the experiment fails
        """
        experiment = self.experiments.get(data.experiment)
        if experiment is None:
            raise ConfigurationError(
                f"Unknown experiment '{data.experiment}' (known: {', '.join(self.names)})", key="experiment"
            )

        logfire.info("Experiment run started", run_id=data.run_id, experiment=data.experiment)
        result = await experiment.execute(data)
        logfire.info(
            "Experiment run completed",
            run_id=data.run_id,
            experiment=data.experiment,
            total_duration=data.total_duration(),
            step_timings=data.step_timings,
        )
        return result
