"""
Report persistence: report.json plus a flat CSV per run.

Floats are written with 17 significant digits so that CSV values round-trip
exactly; the results payload is serialized with sorted keys so identical
runs produce identical bytes.
"""

import csv
import io
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel

from pipeline.models.core import ExperimentData
from schemas.experiment import ExperimentConfig
from schemas.report import Provenance, RunReport
from utils.operator_io import FORMAT_VERSION


def to_jsonable(value: Any) -> Any:
    """Recursively convert numpy scalars/arrays, enums and pydantic models to JSON types."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(mode="python"))
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    return value


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def render_csv(rows: List[Dict[str, Any]], provenance: Dict[str, Any]) -> str:
    """CSV text with a provenance comment line (`# key=value ...`); columns in first-seen order."""
    columns: List[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    buffer = io.StringIO()
    buffer.write("# " + " ".join(f"{k}={v}" for k, v in provenance.items()) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row.get(c)) for c in columns])
    return buffer.getvalue()


def results_json(results: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(results), sort_keys=True, indent=2, allow_nan=False)


def build_report(data: ExperimentData, config: ExperimentConfig, config_path: Optional[str] = None) -> RunReport:
    provenance = Provenance(
        operator_format_version=FORMAT_VERSION,
        config_hash=data.config_hash,
        seed=data.seed,
        threads=data.threads,
        run_id=data.run_id,
        started_at=data.started_at.isoformat(),
        wall_time_s=data.total_duration(),
        config_path=config_path,
    )
    return RunReport(
        experiment=data.experiment,
        config=config.model_dump(mode="json"),
        results=to_jsonable(data.results),
        provenance=provenance,
        warnings=list(data.warnings),
    )


def write_report(
    data: ExperimentData,
    config: ExperimentConfig,
    out_root: Union[str, Path],
    config_path: Optional[str] = None,
) -> Path:
    """
    Write report.json and <table_name>.csv into ``out_root/<run_id>``.

    Returns:
        The run directory
    """
    run_dir = Path(out_root) / data.run_id
    run_dir.mkdir(parents=True, exist_ok=True)

    report = build_report(data, config, config_path)
    payload = report.model_dump(mode="json")
    payload["results"] = json.loads(results_json(data.results))
    (run_dir / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (run_dir / "results.json").write_text(results_json(data.results) + "\n", encoding="utf-8")
    (run_dir / f"{data.table_name}.csv").write_text(
        render_csv(data.table, {"config_hash": data.config_hash, "seed": data.seed}), encoding="utf-8"
    )
    return run_dir
