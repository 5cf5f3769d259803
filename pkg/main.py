"""
annealed-lab command-line entry point.

    python main.py run <config> [--out DIR] [--seed S] [--threads T]
    python main.py suite <manifest> [--out DIR]
    python main.py export-operator <config> --out FILE
    python main.py --version

Every command prints one JSON object on stdout. Failures print
{"error": {"type", "message", "key", "line"}} and exit with 2 (config or
parse), 3 (budget) or 1 (anything else).
"""

import argparse
import asyncio
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import logfire
from pydantic import ValidationError

from config.settings import Settings
from observability.logfire_config import LogfireConfig
from pipeline import create_experiment_runner
from pipeline.core.exceptions import (
    BudgetExceededError,
    ConfigurationError,
    ExperimentExecutionError,
    LabError,
)
from pipeline.core.runner import ExperimentRunner
from pipeline.spectral.main import build_galerkin
from schemas.report import (
    ARTIFACT_VERSION,
    REPORT_FORMAT_VERSION,
    ErrorDetail,
    ErrorObject,
    SuiteReport,
    SuiteRow,
)
from schemas.suite import SuiteManifest
from utils.assertions import Assertion, parse_assertion
from utils.config_loader import (
    load_experiment,
    parse_toml,
    read_text,
    validation_to_configuration_error,
)
from utils.operator_io import FORMAT_VERSION, export_operator
from utils.report_io import render_csv, write_report

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3

VERSION_TEXT = (
    f"annealed-lab {ARTIFACT_VERSION} "
    f"(report format {REPORT_FORMAT_VERSION}, operator format {FORMAT_VERSION})"
)


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True), flush=True)


def error_object(exc: BaseException) -> Tuple[ErrorObject, int]:
    """Map an exception to the machine-readable error object and the exit status."""
    if isinstance(exc, ExperimentExecutionError):
        exc = exc.original_error
    if isinstance(exc, ValidationError):
        exc = validation_to_configuration_error(exc)

    if isinstance(exc, ConfigurationError):
        detail, code = ErrorDetail(type="ConfigurationError", message=str(exc), key=exc.key, line=exc.line), EXIT_CONFIG
    elif isinstance(exc, BudgetExceededError):
        detail, code = ErrorDetail(type="BudgetExceededError", message=str(exc), key=exc.limit_name), EXIT_BUDGET
    else:
        detail, code = ErrorDetail(type=type(exc).__name__, message=str(exc)), EXIT_FAILURE
    return ErrorObject(error=detail), code


# ===================================================================
# COMMANDS
# ===================================================================

async def run_config(
    path: Path,
    out_root: Path,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
    runner: Optional[ExperimentRunner] = None,
) -> Path:
    """Load, run and persist one config; returns the run directory."""
    config, data = load_experiment(path, seed=seed, threads=threads)
    runner = runner or create_experiment_runner()
    await runner.run(data)
    run_dir = write_report(data, config, out_root, str(path))
    logfire.info("Report written", run_dir=str(run_dir), warnings=len(data.warnings))
    return run_dir


def _load_manifest(path: Path) -> List[Tuple[Path, Assertion, object]]:
    """
    Parse a manifest and every assertion in it, and check that each config exists.

    Raises:
        ConfigurationError: unreadable manifest, missing config file, unparseable assertion
    """
    text = read_text(path)
    try:
        manifest = SuiteManifest.model_validate(parse_toml(text, str(path)))
    except ValidationError as e:
        raise validation_to_configuration_error(e, text) from e

    checks = []
    for i, check in enumerate(manifest.check):
        config_path = (path.parent / check.config).resolve()
        if not config_path.is_file():
            raise ConfigurationError(f"Config file not found: {check.config}", key=f"check.{i}.config")
        checks.append((config_path, parse_assertion(check.assertion), check))
    return checks


async def run_suite(manifest_path: Path, out_root: Path) -> Tuple[SuiteReport, Path]:
    """
    Run every check of a manifest concurrently and evaluate its assertion.

    A check whose run fails becomes a failed row; only manifest-level
    problems raise.
    """
    checks = _load_manifest(manifest_path)
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    suite_dir = Path(out_root) / f"suite-{stamp}"
    runner = create_experiment_runner()

    async def one(i: int, config_path: Path, assertion: Assertion, check) -> SuiteRow:
        label = check.name or config_path.name
        try:
            run_dir = await run_config(config_path, suite_dir / f"check-{i:03d}", seed=check.seed, runner=runner)
            report = json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
            passed, measured, threshold = assertion.evaluate(report)
            return SuiteRow(
                config=label,
                assertion=assertion.source,
                passed=passed,
                measured=measured,
                threshold=threshold,
                report_dir=str(run_dir),
            )
        except Exception as e:
            detail, _ = error_object(e)
            logfire.error("Suite check failed", config=label, error=detail.error.message)
            return SuiteRow(
                config=label,
                assertion=assertion.source,
                passed=False,
                error=f"{detail.error.type}: {detail.error.message}",
            )

    with logfire.span("suite.run", manifest=str(manifest_path), checks=len(checks)):
        rows = await asyncio.gather(*(one(i, *c) for i, c in enumerate(checks)))
    report = SuiteReport(rows=list(rows))

    suite_dir.mkdir(parents=True, exist_ok=True)
    digest = hashlib.sha256(manifest_path.read_bytes()).hexdigest()
    (suite_dir / "suite.json").write_text(
        json.dumps({"passed": report.passed, **report.model_dump(mode="json")}, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    (suite_dir / "table.csv").write_text(
        render_csv([row.model_dump(mode="json") for row in report.rows], {"manifest_hash": digest}),
        encoding="utf-8",
    )
    logfire.info("Suite finished", passed=report.passed, rows=len(report.rows))
    return report, suite_dir


def export_from_config(config_path: Path, out_file: Path) -> Path:
    """
    Build the Galerkin operator described by a config and write it in the binary format.

    Raises:
        ConfigurationError: the experiment's parameters carry no box radius K
    """
    _, data = load_experiment(config_path)
    K = getattr(data.parameters, "K", None)
    if K is None or data.model is None:
        raise ConfigurationError("export-operator needs a config with a model and parameters.K", key="parameters.K")
    s = getattr(data.parameters, "s", 0.0) or 0.0
    op = build_galerkin(data.model, data.measure, K, s)
    path = export_operator(op, out_file)
    logfire.info("Operator exported", path=str(path), K=K, s=s, modes=op.index.size)
    return path


# ===================================================================
# ARGUMENTS
# ===================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annealed-lab", description="Random dynamics numerical lab")
    parser.add_argument("--version", action="version", version=VERSION_TEXT)
    parser.add_argument("--quiet", action="store_true", help="silence console logging")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run one experiment config")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=None, help="output root (default: LAB_OUTPUT_ROOT)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--threads", type=int, default=None)

    suite = commands.add_parser("suite", help="run a manifest of configs with assertions")
    suite.add_argument("manifest", type=Path)
    suite.add_argument("--out", type=Path, default=None, help="output root (default: LAB_OUTPUT_ROOT)")

    export = commands.add_parser("export-operator", help="write a Galerkin operator in the binary format")
    export.add_argument("config", type=Path)
    export.add_argument("--out", type=Path, required=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        settings = Settings()
        LogfireConfig.initialize(
            token=settings.logfire_token or None,
            log_level=settings.log_level,
            console=not args.quiet,
            environment=settings.environment,
        )
        out_root = getattr(args, "out", None) or settings.output_root

        if args.command == "run":
            if args.threads is not None and args.threads < 1:
                raise ConfigurationError("--threads must be >= 1", key="threads")
            run_dir = asyncio.run(run_config(args.config, out_root, seed=args.seed, threads=args.threads))
            report = json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
            _emit({
                "run_dir": str(run_dir),
                "experiment": report["experiment"],
                "config_hash": report["provenance"]["config_hash"],
                "warnings": report["warnings"],
            })
            return EXIT_OK

        if args.command == "suite":
            report, suite_dir = asyncio.run(run_suite(args.manifest, out_root))
            _emit({"suite_dir": str(suite_dir), "passed": report.passed, **report.model_dump(mode="json")})
            return EXIT_OK if report.passed else EXIT_FAILURE

        path = export_from_config(args.config, args.out)
        _emit({"operator": str(path), "format_version": FORMAT_VERSION})
        return EXIT_OK

    except (LabError, ValidationError) as e:
        error, code = error_object(e)
        _emit(error.model_dump(mode="json"))
        return code
    except Exception as e:
        logfire.error("Unexpected failure", error=str(e), error_type=type(e).__name__, exc_info=True)
        error, code = error_object(e)
        _emit(error.model_dump(mode="json"))
        return code


if __name__ == "__main__":
    sys.exit(main())
