"""
Global Exception Handlers

Map the exception hierarchy onto CLI exit codes and single-line error reports.
"""

import logging
import sys
from collections.abc import Callable
from typing import Any, TextIO

from pydantic import ValidationError

from dyexplainer.core.exceptions import (
    CheckpointNotFoundError,
    ConfigError,
    DataError,
    DyExplainerException,
    EdgeParseError,
    ExportError,
    FullyMaskedRowError,
    NonFiniteError,
    NumericError,
    ShapeError,
    UnknownConfigKeyError,
)
from dyexplainer.schemas.common import ErrorDetail, ErrorResponse

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def create_error_response(
    exit_code: int,
    message: str,
    error_type: str = "error",
    details: Any = None,
) -> ErrorResponse:
    """Create a consistent error report."""
    return ErrorResponse(
        error=ErrorDetail(type=error_type, code=exit_code, message=message, details=details)
    )


# Most specific first; the first matching entry wins.
_HANDLERS: list[tuple[type[BaseException], int, str]] = [
    (UnknownConfigKeyError, EXIT_CONFIG, "unknown_config_key"),
    (CheckpointNotFoundError, EXIT_CONFIG, "checkpoint_not_found"),
    (ConfigError, EXIT_CONFIG, "config_error"),
    (EdgeParseError, EXIT_DATA, "parse_error"),
    (ExportError, EXIT_DATA, "io_error"),
    (DataError, EXIT_DATA, "data_error"),
    (ShapeError, EXIT_NUMERIC, "shape_error"),
    (FullyMaskedRowError, EXIT_NUMERIC, "masked_row"),
    (NonFiniteError, EXIT_NUMERIC, "non_finite"),
    (NumericError, EXIT_NUMERIC, "numeric_error"),
]


def _describe(exc: BaseException) -> tuple[int, str, str, Any]:
    if isinstance(exc, ValidationError):
        errors = [
            {
                "field": ".".join(str(part) for part in error["loc"]),
                "message": error["msg"],
                "type": error["type"],
            }
            for error in exc.errors()
        ]
        logger.warning(f"Validation error: {errors}")
        fields = ", ".join(f"{e['field']}: {e['message']}" for e in errors)
        return EXIT_CONFIG, "validation_error", f"Validation failed ({fields})", errors

    for exc_type, code, error_type in _HANDLERS:
        if isinstance(exc, exc_type):
            assert isinstance(exc, DyExplainerException)
            return code, error_type, exc.message, exc.details

    if isinstance(exc, DyExplainerException):
        logger.error(f"DyExplainer exception: {exc.message}", exc_info=True)
        return EXIT_INTERNAL, "application_error", exc.message, exc.details

    if isinstance(exc, FileNotFoundError):
        return EXIT_DATA, "file_not_found", str(exc), None

    logger.exception(f"Unexpected error: {exc}")
    return EXIT_INTERNAL, "internal_error", "An unexpected error occurred", None


def handle_exception(exc: BaseException, stream: TextIO | None = None) -> int:
    """Report an exception as one line on `stream` and return its exit code."""
    code, error_type, message, details = _describe(exc)
    response = create_error_response(code, message, error_type, details)
    print(response.to_line(), file=stream or sys.stderr)
    return code


def run_guarded(fn: Callable[[], int | None], stream: TextIO | None = None) -> int:
    """Run a command body, converting raised exceptions into exit codes."""
    try:
        result = fn()
    except Exception as exc:
        return handle_exception(exc, stream)
    return EXIT_OK if result is None else result
