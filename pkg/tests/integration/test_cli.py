"""
End-to-end tests for the command-line surface.

Each test writes small configs into a temporary directory, calls main()
in-process and reads the single JSON line it prints plus the files it
leaves in the run directory.

Usage:
    pytest tests/integration/ -v
"""

from __future__ import annotations

import json
import textwrap
from pathlib import Path

import pytest

from main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, VERSION_TEXT, main
from utils.operator_io import read_operator

pytestmark = pytest.mark.integration

J0_1 = 0.7651976865579666

TRANSLATION = """\
experiment = "expansion"
seed = 1

[model]
variant = "affine-torus"

[[model.maps]]
id = "T"
matrix = [[1, 0], [0, 1]]
offset = [0.5, 0.25]

[parameters]
N = 1
"""

PIERREHUMBERT_SPECTRUM = """\
experiment = "spectrum"

[model]
variant = "pierrehumbert"
tau = 1.0

[parameters]
K = 4
"""

RATIONAL_TRANSLATION = """\
experiment = "spectrum"

[model]
variant = "rational-translation"
denominator = 4

[parameters]
K = 4
"""

CORRELATION_MC = """\
experiment = "correlation"
seed = 11

[model]
variant = "pierrehumbert"
tau = 1.0

[parameters]
n_max = 3
method = "monte-carlo"
fit = false

[parameters.phi]
cosine = [1, 0]

[budgets]
mc_samples = 6000
block_size = 500
"""


def _write(directory: Path, name: str, text: str) -> Path:
    path = directory / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return path


def _invoke(capsys, *argv: str):
    code = main(["--quiet", *argv])
    lines = [line for line in capsys.readouterr().out.splitlines() if line.strip()]
    return code, json.loads(lines[-1])


def test_version(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert VERSION_TEXT in capsys.readouterr().out


def test_translation_run_writes_report(tmp_path, capsys):
    config = _write(tmp_path, "translation.toml", TRANSLATION)
    code, payload = _invoke(capsys, "run", str(config), "--out", str(tmp_path / "runs"))

    assert code == EXIT_OK
    run_dir = Path(payload["run_dir"])
    assert run_dir.parent == tmp_path / "runs"
    report = json.loads((run_dir / "report.json").read_text())
    assert report["results"]["estimate"]["value"] == 0.0
    assert report["provenance"]["config_hash"] == payload["config_hash"]
    assert (run_dir / "table.csv").exists()


def test_misspelled_key_exits_with_config_error(tmp_path, capsys):
    text = TRANSLATION.replace("[model]", "[modle]").replace("[[model.maps]]", "[[modle.maps]]")
    config = _write(tmp_path, "bad.toml", text)
    code, payload = _invoke(capsys, "run", str(config), "--out", str(tmp_path / "runs"))

    assert code == EXIT_CONFIG
    assert payload["error"]["type"] == "ConfigurationError"
    assert payload["error"]["key"] == "modle"
    assert payload["error"]["line"] == 4
    assert not (tmp_path / "runs").exists()


def test_missing_config_file(tmp_path, capsys):
    code, payload = _invoke(capsys, "run", str(tmp_path / "absent.toml"), "--out", str(tmp_path))
    assert code == EXIT_CONFIG
    assert "not found" in payload["error"]["message"]


def test_pierrehumbert_subleading_eigenvalue(tmp_path, capsys):
    config = _write(tmp_path, "spectrum.toml", PIERREHUMBERT_SPECTRUM)
    code, payload = _invoke(capsys, "run", str(config), "--out", str(tmp_path / "runs"))

    assert code == EXIT_OK
    report = json.loads((Path(payload["run_dir"]) / "report.json").read_text())
    assert report["results"]["spectrum"]["subleading_modulus"] == pytest.approx(J0_1, abs=1e-8)


def test_series_csv_does_not_depend_on_thread_count(tmp_path, capsys):
    config = _write(tmp_path, "correlation.toml", CORRELATION_MC)
    outputs = []
    for threads in ("1", "8"):
        code, payload = _invoke(
            capsys, "run", str(config), "--out", str(tmp_path / f"runs-{threads}"), "--threads", threads
        )
        assert code == EXIT_OK
        outputs.append((Path(payload["run_dir"]) / "series.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_zero_threads_is_rejected(tmp_path, capsys):
    config = _write(tmp_path, "translation.toml", TRANSLATION)
    code, payload = _invoke(capsys, "run", str(config), "--threads", "0", "--out", str(tmp_path))
    assert code == EXIT_CONFIG
    assert payload["error"]["key"] == "threads"


def test_suite_with_failing_control(tmp_path, capsys):
    _write(tmp_path, "translation.toml", TRANSLATION)
    _write(tmp_path, "rational.toml", RATIONAL_TRANSLATION)
    manifest = _write(
        tmp_path,
        "suite.toml",
        """\
        [[check]]
        name = "translation"
        config = "translation.toml"
        assert = "results.estimate.value == 0"

        [[check]]
        name = "rational translation has a gap"
        config = "rational.toml"
        assert = "results.spectrum.unit_multiplicity == 1"
        """,
    )
    code, payload = _invoke(capsys, "suite", str(manifest), "--out", str(tmp_path / "runs"))

    assert code == EXIT_FAILURE
    assert payload["passed"] is False
    rows = payload["rows"]
    assert [row["config"] for row in rows] == ["translation", "rational translation has a gap"]
    assert [row["passed"] for row in rows] == [True, False]
    assert rows[1]["measured"] == 9.0
    suite_dir = Path(payload["suite_dir"])
    assert (suite_dir / "suite.json").exists()
    assert (suite_dir / "table.csv").read_text().startswith("# manifest_hash=")


def test_suite_check_that_errors_is_a_failed_row(tmp_path, capsys):
    _write(tmp_path, "spectrum.toml", PIERREHUMBERT_SPECTRUM.replace("K = 4", "K = 500"))
    manifest = _write(
        tmp_path, "suite.toml", '[[check]]\nconfig = "spectrum.toml"\nassert = "results.spectrum.subleading_modulus < 1"\n'
    )
    code, payload = _invoke(capsys, "suite", str(manifest), "--out", str(tmp_path / "runs"))

    assert code == EXIT_FAILURE
    assert payload["rows"][0]["passed"] is False
    assert "BudgetExceededError" in payload["rows"][0]["error"]


def test_empty_manifest_passes(tmp_path, capsys):
    manifest = _write(tmp_path, "empty.toml", "")
    code, payload = _invoke(capsys, "suite", str(manifest), "--out", str(tmp_path / "runs"))
    assert code == EXIT_OK
    assert payload["passed"] is True
    assert payload["rows"] == []


def test_manifest_naming_missing_config(tmp_path, capsys):
    manifest = _write(tmp_path, "suite.toml", '[[check]]\nconfig = "absent.toml"\nassert = "results.x < 1"\n')
    code, payload = _invoke(capsys, "suite", str(manifest), "--out", str(tmp_path / "runs"))
    assert code == EXIT_CONFIG
    assert payload["error"]["key"] == "check.0.config"


def test_export_operator_round_trip(tmp_path, capsys):
    config = _write(tmp_path, "spectrum.toml", PIERREHUMBERT_SPECTRUM.replace("K = 4", "K = 2"))
    out = tmp_path / "operator.bin"
    code, payload = _invoke(capsys, "export-operator", str(config), "--out", str(out))

    assert code == EXIT_OK
    assert payload["operator"] == str(out)
    op = read_operator(out)
    assert op.K == 2
    i = int(op.index.index_of([[1, 0]])[0])
    assert abs(op.matrix[i, i]) == pytest.approx(J0_1)


def test_export_operator_needs_box_radius(tmp_path, capsys):
    config = _write(tmp_path, "translation.toml", TRANSLATION)
    code, payload = _invoke(capsys, "export-operator", str(config), "--out", str(tmp_path / "op.bin"))
    assert code == EXIT_CONFIG
    assert payload["error"]["key"] == "parameters.K"
