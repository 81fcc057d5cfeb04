"""
Custom Exception Classes

Application-specific exceptions for consistent error handling. Each family
maps to one CLI exit code (see `dyexplainer.core.handlers`).
"""

from typing import Any


class DyExplainerException(Exception):
    """Base exception for the DyExplainer package."""

    def __init__(self, message: str, details: Any = None):
        self.message = message
        self.details = details
        super().__init__(self.message)


# ==================== Configuration ====================


class ConfigError(DyExplainerException):
    """Raised when a run configuration is invalid."""

    pass


class UnknownConfigKeyError(ConfigError):
    """Raised when a configuration file or override names an unknown key."""

    def __init__(self, key: str):
        super().__init__(f"Unknown configuration key: {key}", details={"key": key})


class CheckpointNotFoundError(ConfigError):
    """Raised when a command needs a checkpoint that does not exist."""

    def __init__(self, path: str):
        super().__init__(f"Checkpoint not found: {path}", details={"path": path})


class InfeasibleSpecError(ConfigError):
    """Raised when a planted-data specification cannot be realised."""

    pass


class RegularizationWeightError(ConfigError):
    """Raised when the objective trade-off weights are out of range."""

    def __init__(self, alpha: float, beta: float):
        super().__init__(
            f"alpha + beta must not exceed 1 (got alpha={alpha}, beta={beta})",
            details={"alpha": alpha, "beta": beta},
        )


# ==================== Data ====================


class DataError(DyExplainerException):
    """Raised when input data is malformed or unusable."""

    pass


class EdgeParseError(DataError):
    """Raised when a line of an edge stream cannot be parsed."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        super().__init__(
            f"Parse error at line {line_number}: {reason}",
            details={"line": line_number},
        )


class EmptyEdgeStreamError(DataError):
    """Raised when an edge stream holds no edges."""

    def __init__(self, message: str = "no edges"):
        super().__init__(message)


class BucketingError(DataError):
    """Raised when edges cannot be partitioned with the requested policy."""

    pass


class NodeIndexError(DataError, IndexError):
    """Raised when a node index is outside the node universe."""

    def __init__(self, node: int, num_nodes: int):
        super().__init__(
            f"Node {node} is out of range for {num_nodes} nodes",
            details={"node": node, "num_nodes": num_nodes},
        )


class BufferShapeError(DataError):
    """Raised when an embedding does not match the buffer's node count."""

    pass


class EmptyEvaluationSetError(DataError):
    """Raised when a metric is requested over an empty set of edges."""

    def __init__(self, message: str = "Evaluation edge set is empty"):
        super().__init__(message)


class AnchorSelectionError(DataError):
    """Raised when no anchor of a contrastive term is usable."""

    pass


class GroundTruthError(DataError):
    """Raised when ground truth cannot score an explanation."""

    pass


class ExportError(DataError):
    """Raised when an artifact cannot be written."""

    pass


class CheckpointFormatError(DataError):
    """Raised when a checkpoint file is corrupt or has an unknown schema."""

    pass


# ==================== Numerics ====================


class NumericError(DyExplainerException):
    """Raised when a numerical computation fails."""

    pass


class ShapeError(NumericError, ValueError):
    """Raised when tensor shapes are incompatible."""

    pass


class FullyMaskedRowError(NumericError):
    """Raised when a masked softmax row has no unmasked entry."""

    def __init__(self, row: int | tuple[int, ...]):
        self.row = row
        super().__init__(f"Masked softmax row {row} is fully masked", details={"row": row})


class GateDomainError(NumericError):
    """Raised when a concrete-gate noise sample is outside (0, 1)."""

    pass


class NonFiniteError(NumericError):
    """Raised when a NaN or infinity appears in a computation."""

    def __init__(self, op: str, message: str | None = None):
        self.op = op
        super().__init__(message or f"Non-finite value produced by op '{op}'", details={"op": op})
