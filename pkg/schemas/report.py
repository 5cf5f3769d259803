"""
Pydantic schemas for run reports, suite tables and CLI error objects.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

ARTIFACT_VERSION = "1.0.0"
REPORT_FORMAT_VERSION = 1


class Provenance(BaseModel):
    """Everything needed to trace a number back to its config."""
    artifact_version: str = ARTIFACT_VERSION
    report_format_version: int = REPORT_FORMAT_VERSION
    operator_format_version: int
    config_hash: str
    seed: int
    threads: int
    run_id: str
    started_at: str
    wall_time_s: float
    config_path: Optional[str] = None


class RunReport(BaseModel):
    """
    Full record of one run (report.json).

    ``results`` depends only on config and seed; provenance carries the
    run-specific timing.
    """
    experiment: str
    config: Dict[str, Any]
    """Echo of the validated config"""
    results: Dict[str, Any]
    provenance: Provenance
    warnings: List[str] = Field(default_factory=list)


class SuiteRow(BaseModel):
    config: str
    assertion: str
    passed: bool
    measured: Optional[float] = None
    threshold: Optional[float] = None
    report_dir: Optional[str] = None
    error: Optional[str] = None


class SuiteReport(BaseModel):
    rows: List[SuiteRow] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


class ErrorDetail(BaseModel):
    type: str
    message: str
    key: Optional[str] = None
    line: Optional[int] = None


class ErrorObject(BaseModel):
    """Machine-readable error printed on stdout by the CLI."""
    error: ErrorDetail
