"""Report persistence: CSV formatting, provenance header and JSON conversion."""

import json

import numpy as np
import pytest

from schemas.experiment import ExperimentConfig
from utils.report_io import format_cell, render_csv, to_jsonable, write_report


def test_floats_use_seventeen_significant_digits():
    assert format_cell(0.1) == "0.10000000000000001"
    assert float(format_cell(0.7651976865579666)) == 0.7651976865579666
    assert format_cell(np.float64(1.0)) == "1"


def test_cell_conversions():
    assert format_cell(None) == ""
    assert format_cell(True) == "true"
    assert format_cell(np.int64(7)) == "7"
    assert format_cell("operator") == "operator"


def test_csv_header_and_first_seen_columns():
    text = render_csv([{"n": 0, "re": 1.0}, {"n": 1, "re": 0.5, "stderr": 0.01}], {"config_hash": "abc", "seed": 3})
    lines = text.splitlines()
    assert lines[0] == "# config_hash=abc seed=3"
    assert lines[1] == "n,re,stderr"
    assert lines[2] == "0,1,"
    assert lines[3] == "1,0.5,0.01"


def test_to_jsonable_handles_numpy_complex_and_nonfinite():
    payload = to_jsonable({
        1: np.arange(3),
        "z": 1 + 2j,
        "flag": np.bool_(True),
        "inf": float("inf"),
    })
    assert payload == {"1": [0, 1, 2], "z": [1.0, 2.0], "flag": True, "inf": "inf"}
    json.dumps(payload, allow_nan=False)


def test_write_report_layout(tmp_path, experiment_data):
    config = ExperimentConfig.model_validate({"experiment": "conormal", "seed": 4})
    data = experiment_data("conormal", {"pairs": 1}, seed=4)
    data.results = {"max_relative_discrepancy": np.float64(1e-15)}
    data.record_table([{"d": 2, "pairs": 1, "max_relative_discrepancy": 1e-15}], name="table")

    run_dir = write_report(data, config, tmp_path, "conormal.toml")

    assert run_dir == tmp_path / data.run_id
    report = json.loads((run_dir / "report.json").read_text())
    assert report["experiment"] == "conormal"
    assert report["provenance"]["seed"] == 4
    assert report["provenance"]["config_path"] == "conormal.toml"
    assert report["results"]["max_relative_discrepancy"] == pytest.approx(1e-15)
    csv_text = (run_dir / "table.csv").read_text()
    assert csv_text.startswith(f"# config_hash={data.config_hash} seed=4\n")
    assert not (run_dir / "series.csv").exists()
