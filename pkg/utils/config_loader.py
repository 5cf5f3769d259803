"""
Experiment config loading.

Parses TOML, validates it against schemas.experiment, builds the model and
measure, and returns the ExperimentData the runner consumes. Every failure
is raised as ConfigurationError carrying the offending key and, when it can
be located in the file, its line.
"""

import hashlib
import json
import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence, Tuple, Union

import logfire
from pydantic import BaseModel, ValidationError

from config.settings import Settings
from pipeline.core.exceptions import ConfigurationError
from pipeline.maps.main import build_model
from pipeline.models.core import ExperimentData
from schemas.experiment import PARAMETER_MODELS, ExperimentConfig

_TOML_LINE = re.compile(r"line (\d+)")


def locate_key(text: str, loc: Sequence[Union[str, int]]) -> Optional[int]:
    """
    Best-effort 1-based line of a dotted key path in TOML source.

    Walks the path component by component, each search starting at the line
    where the previous component was found. Components that never appear
    (list indices, union tags) are skipped.
    """
    lines = text.splitlines()
    start, found = 0, None
    for part in loc:
        if isinstance(part, int):
            continue
        pattern = re.compile(
            r'^\s*(\[\[?\s*)?([\w"-]+\.)*"?' + re.escape(str(part)) + r'"?\s*(=|\]|\.)'
        )
        for i in range(start, len(lines)):
            if pattern.match(lines[i]):
                start, found = i, i + 1
                break
    return found


def _dotted(loc: Sequence[Union[str, int]]) -> str:
    return ".".join(str(p) for p in loc)


def validation_to_configuration_error(
    error: ValidationError, text: str = "", prefix: Tuple[str, ...] = ()
) -> ConfigurationError:
    """Convert the first pydantic error into a ConfigurationError naming key and line."""
    first = error.errors()[0]
    loc = tuple(prefix) + tuple(first.get("loc", ()))
    key = _dotted(loc) or None
    if first.get("type") == "extra_forbidden":
        message = f"Unknown key '{key}'"
    else:
        message = f"{key}: {first.get('msg')}" if key else str(first.get("msg"))
    return ConfigurationError(message, key=key, line=locate_key(text, loc) if loc else None)


def parse_toml(text: str, source: str = "<config>") -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        match = _TOML_LINE.search(str(e))
        raise ConfigurationError(f"{source}: {e}", line=int(match.group(1)) if match else None) from e


def read_text(path: Union[str, Path]) -> str:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Config file not found: {path}", key=str(path))
    return path.read_text(encoding="utf-8")


def config_hash(config: ExperimentConfig) -> str:
    """sha256 of the canonical JSON config; the thread count is left out since results do not depend on it."""
    payload = json.dumps(config.model_dump(mode="json", exclude={"threads"}), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def validate_config(raw: dict, text: str = "") -> Tuple[ExperimentConfig, BaseModel]:
    """Validate the top level, then ``parameters`` with the experiment's parameter model."""
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise validation_to_configuration_error(e, text) from e

    try:
        parameters = PARAMETER_MODELS[config.experiment].model_validate(config.parameters)
    except ValidationError as e:
        raise validation_to_configuration_error(e, text, prefix=("parameters",)) from e
    return config, parameters


def load_experiment(
    path: Union[str, Path],
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> Tuple[ExperimentConfig, ExperimentData]:
    """
    Load, validate and materialize one experiment config.

    Args:
        path: TOML config file
        seed: Overrides the config's seed
        threads: Overrides the config's thread count (default from settings)

    Returns:
        (validated config, run state ready for the runner)

    Raises:
        ConfigurationError: missing file, TOML syntax, schema or model errors
    """
    text = read_text(path)
    config, parameters = validate_config(parse_toml(text, str(path)), text)

    updates: dict[str, Any] = {}
    if seed is not None:
        updates["seed"] = seed
    if threads is not None:
        updates["threads"] = threads
    if updates:
        config = config.model_copy(update=updates)

    settings = Settings()
    n_threads = config.threads or settings.default_threads
    digest = config_hash(config)

    model = build_model(config.model) if config.model is not None else None
    if config.measure is not None:
        measure = config.measure.build()
        if model is not None:
            for map_id in measure.map_ids():
                model.resolve(map_id)
    else:
        measure = model.default_measure if model is not None else None

    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
    data = ExperimentData(
        run_id=f"{stamp}-{config.experiment}-{digest[:8]}",
        experiment=config.experiment,
        parameters=parameters,
        config_hash=digest,
        seed=config.seed,
        threads=n_threads,
        model=model,
        measure=measure,
        budget=config.budgets.build(config.seed, n_threads),
    )
    logfire.info(
        "Config loaded",
        path=str(path),
        experiment=config.experiment,
        config_hash=digest,
        seed=config.seed,
        threads=n_threads,
    )
    return config, data
