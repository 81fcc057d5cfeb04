"""
Common Schemas

Shared Pydantic models used across commands.
"""

import json
from typing import Any

from pydantic import BaseModel, ConfigDict


class StrictModel(BaseModel):
    """Base for configuration sections: unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ErrorDetail(BaseModel):
    """Error detail in a command failure report."""

    type: str
    code: int
    message: str
    details: Any | None = None


class ErrorResponse(BaseModel):
    """Standard error report."""

    error: ErrorDetail

    def to_line(self) -> str:
        """Render as a single machine-parseable line."""
        return (
            f"error type={self.error.type} code={self.error.code} "
            f"message={json.dumps(self.error.message)}"
        )
