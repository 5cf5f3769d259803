"""Core data models for experiment runs."""

from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import TYPE_CHECKING, Any, Dict, List, Optional

import logfire

if TYPE_CHECKING:
    from pipeline.cocycle.models import CocycleBudget
    from pipeline.measure.models import DrivingMeasure


@dataclass
class ExperimentData:
    """
    In-memory state of one experiment run.

    Built by the config loader, filled by exactly one experiment step and
    written to disk by the report writer.
    """

    # Inputs (set by the config loader)
    run_id: str
    """Directory-safe identifier of this run - used for correlation in Logfire"""

    experiment: str
    """Experiment key, e.g. 'spectrum' or 'clt'"""

    parameters: Any
    """Validated per-experiment parameter model"""

    config_hash: str
    """sha256 of the canonical config (seed included, thread count excluded)"""

    seed: int = 0
    threads: int = 1

    model: Optional[Any] = None
    """Model handle from pipeline.maps.build_model (None for self-contained experiments)"""

    measure: Optional["DrivingMeasure"] = None
    """Driving measure; the model's registered measure when the config names none"""

    budget: Optional["CocycleBudget"] = None
    """Sampling budget; None lets each estimator use its settings defaults"""

    # Outputs (set by the experiment step)
    results: Dict[str, Any] = field(default_factory=dict)
    """
    JSON-ready results payload. Must depend only on config and seed so that
    reruns reproduce it byte for byte.
    """

    table: List[Dict[str, Any]] = field(default_factory=list)
    """Flat rows written to CSV"""

    table_name: str = "series"
    """CSV file stem: 'series' for per-n data, 'table' for everything else"""

    warnings: List[str] = field(default_factory=list)
    """Truncation losses, fallbacks, below-noise windows, gapless flags"""

    # Transient data (logged to Logfire, written to provenance)
    started_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    step_timings: Dict[str, float] = field(default_factory=dict)
    errors: List[str] = field(default_factory=list)

    # ===================================================================
    # HELPER METHODS
    # ===================================================================

    def total_duration(self) -> float:
        """Wall time since the run started, in seconds"""
        return (datetime.now(timezone.utc) - self.started_at).total_seconds()

    def add_timing(self, step_name: str, duration: float) -> None:
        self.step_timings[step_name] = duration

    def add_warning(self, message: str, **attributes: Any) -> None:
        """Record a report warning and log it."""
        logfire.warning(message, run_id=self.run_id, **attributes)
        self.warnings.append(message)

    def add_error(self, step_name: str, error_message: str) -> None:
        self.errors.append(f"{step_name}: {error_message}")

    def record_table(self, rows: List[Dict[str, Any]], name: str = "series") -> None:
        self.table = rows
        self.table_name = name


# ===================================================================
# EXPERIMENT RESULT
# ===================================================================

@dataclass
class ExperimentResult:
    """
    Result of one experiment execution.

    Returned by BaseExperiment.execute() to indicate success/failure.
    """

    success: bool
    step_name: str
    error: Optional[str] = None

    metadata: Optional[Dict[str, Any]] = None
    """Execution metadata (duration)"""

    warnings: List[str] = field(default_factory=list)

    def __post_init__(self):
        """Validation: if success=False, error must be set"""
        if not self.success and not self.error:
            raise ValueError("ExperimentResult with success=False must have error message")
