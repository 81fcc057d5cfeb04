"""
CLI Dependencies

Shared plumbing for commands: strict config loading, key=value overrides and
the RunService every command works through.
"""

import argparse
import json
from collections.abc import Sequence
from pathlib import Path
from types import UnionType
from typing import Any, Union, get_args, get_origin

from pydantic import BaseModel

from dyexplainer.config import settings
from dyexplainer.core.exceptions import ConfigError, UnknownConfigKeyError
from dyexplainer.schemas.config import RunConfig
from dyexplainer.services.run_service import RunService


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", help="JSON run configuration")
    parser.add_argument(
        "overrides",
        nargs="*",
        metavar="KEY=VALUE",
        help="dotted config overrides, e.g. train.alpha=0 explainer.temporal_window=2",
    )
    parser.add_argument("-o", "--output-dir", help="artifact directory")
    parser.add_argument("--threads", type=int, help="internal parallelism (1 is reproducible)")
    parser.add_argument(
        "--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="log verbosity"
    )
    parser.add_argument("-q", "--quiet", action="store_true", help="no progress bars")


def add_checkpoint_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--checkpoint", help="checkpoint written by train (default: <output-dir>/checkpoint.dyx)"
    )


def emit(payload: BaseModel | dict[str, Any] | list[Any]) -> None:
    """Print a command result as one JSON line on stdout."""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    elif isinstance(payload, list):
        payload = [p.model_dump(mode="json") if isinstance(p, BaseModel) else p for p in payload]
    print(json.dumps(payload, sort_keys=True))


def _nested_model(annotation: Any) -> type[BaseModel] | None:
    """The model class behind a field annotation, unwrapping `X | None`."""
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    if get_origin(annotation) in (Union, UnionType):
        for arg in get_args(annotation):
            found = _nested_model(arg)
            if found is not None:
                return found
    return None


def check_known_keys(data: dict[str, Any], model: type[BaseModel], prefix: str = "") -> None:
    """
    Reject any key the configuration schema does not define.

    Raises:
        UnknownConfigKeyError: Naming the first unknown dotted key
    """
    for key, value in data.items():
        dotted = f"{prefix}{key}"
        field = model.model_fields.get(key)
        if field is None:
            raise UnknownConfigKeyError(dotted)
        nested = _nested_model(field.annotation)
        if nested is not None and isinstance(value, dict):
            check_known_keys(value, nested, f"{dotted}.")


def parse_override(text: str) -> tuple[list[str], Any]:
    """Split "a.b=value"; the value is decoded as JSON when it parses."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"Override '{text}' is not of the form section.key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(data: dict[str, Any], overrides: Sequence[str]) -> dict[str, Any]:
    for text in overrides:
        path, value = parse_override(text)
        target = data
        for part in path[:-1]:
            child = target.setdefault(part, {})
            if not isinstance(child, dict):
                raise UnknownConfigKeyError(".".join(path))
            target = child
        target[path[-1]] = value
    return data


def load_run_config(path: str | Path | None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Read a JSON run configuration, apply overrides and validate strictly.

    Raises:
        FileNotFoundError: If `path` does not exist
        ConfigError: If the file is not a JSON object
        UnknownConfigKeyError: If any key is unknown
    """
    data: dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise FileNotFoundError(f"Config file not found: {config_path}")
        try:
            data = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Config file {config_path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {config_path} must hold a JSON object")
    data = apply_overrides(data, overrides)
    check_known_keys(data, RunConfig)
    return RunConfig.model_validate(data)


def resolve_output_dir(args: argparse.Namespace, config: RunConfig) -> Path:
    """--output-dir, then the config, then DYX_OUTPUT_DIR."""
    return Path(args.output_dir or config.output_dir or settings.OUTPUT_DIR)


def resolve_threads(args: argparse.Namespace, config: RunConfig) -> int:
    """--threads, then the config, then DYX_THREADS."""
    return int(args.threads or config.threads or settings.THREADS)


def get_run_service(args: argparse.Namespace) -> RunService:
    """Build the RunService a command runs against."""
    config = load_run_config(args.config, args.overrides)
    return RunService(
        config,
        resolve_output_dir(args, config),
        threads=resolve_threads(args, config),
        progress=not args.quiet,
    )
