"""
Edge Stream Repository

Reads plain-text edge lists into timestamped edges and writes them back.
Lines starting with "#" or "%" are comments.
"""

import math
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Literal

from dyexplainer.core.exceptions import (
    ConfigError,
    EdgeParseError,
    EmptyEdgeStreamError,
    ExportError,
)
from dyexplainer.core.logging import get_logger
from dyexplainer.models.graph import TimestampedEdge

logger = get_logger(__name__)

_ALIASES = {
    "src": "src",
    "source": "src",
    "dst": "dst",
    "target": "dst",
    "time": "time",
    "timestamp": "time",
    "weight": "weight",
    "rating": "weight",
    "label": "label",
    "_": None,
    "skip": None,
}

Delimiter = Literal["auto", "comma", "whitespace"]


class ColumnSpec:
    """Column layout of an edge list, e.g. "src,dst,weight,time"."""

    def __init__(self, spec: str):
        self.spec = spec
        self.positions: dict[str, int] = {}
        names = [name.strip().lower() for name in spec.split(",")]
        for position, name in enumerate(names):
            if name not in _ALIASES:
                raise ConfigError(f"Unknown column '{name}' in column spec '{spec}'")
            field = _ALIASES[name]
            if field is None:
                continue
            if field in self.positions:
                raise ConfigError(f"Column '{field}' appears twice in column spec '{spec}'")
            self.positions[field] = position
        missing = {"src", "dst", "time"} - set(self.positions)
        if missing:
            raise ConfigError(f"Column spec '{spec}' lacks {sorted(missing)}")
        self.min_columns = max(3, max(self.positions.values()) + 1)


def _split(line: str, delimiter: Delimiter) -> list[str]:
    if delimiter == "comma" or (delimiter == "auto" and "," in line):
        return [token.strip() for token in line.split(",")]
    return line.split()


def _node_id(token: str, line_number: int) -> int:
    try:
        value = int(token)
    except ValueError:
        try:
            as_float = float(token)
        except ValueError:
            raise EdgeParseError(line_number, f"node id '{token}' is not an integer") from None
        if not as_float.is_integer():
            raise EdgeParseError(line_number, f"node id '{token}' is not an integer") from None
        value = int(as_float)
    if value < 0:
        raise EdgeParseError(line_number, f"node id {value} is negative")
    return value


def _real(token: str, what: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise EdgeParseError(line_number, f"{what} '{token}' is not a number") from None
    if not math.isfinite(value):
        raise EdgeParseError(line_number, f"{what} '{token}' is not finite")
    return value


def parse_edge_lines(
    lines: Iterable[str],
    columns: str = "src,dst,time",
    delimiter: Delimiter = "auto",
) -> list[TimestampedEdge]:
    """
    Parse edge-list lines in order.

    Raises:
        EdgeParseError: On a malformed line, naming its 1-based number
        EmptyEdgeStreamError: If no edge is found
    """
    spec = ColumnSpec(columns)
    edges: list[TimestampedEdge] = []
    for line_number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith(("#", "%")):
            continue
        tokens = _split(line, delimiter)
        if len(tokens) < spec.min_columns:
            raise EdgeParseError(
                line_number, f"expected at least {spec.min_columns} columns, got {len(tokens)}"
            )
        pos = spec.positions
        weight = _real(tokens[pos["weight"]], "weight", line_number) if "weight" in pos else None
        label = None
        if "label" in pos:
            label = int(_real(tokens[pos["label"]], "label", line_number))
        edges.append(
            TimestampedEdge(
                src=_node_id(tokens[pos["src"]], line_number),
                dst=_node_id(tokens[pos["dst"]], line_number),
                timestamp=_real(tokens[pos["time"]], "timestamp", line_number),
                weight=weight,
                label=label,
            )
        )
    if not edges:
        raise EmptyEdgeStreamError()
    return edges


def _decoded(handle: Iterable[bytes]) -> Iterator[str]:
    for line_number, raw in enumerate(handle, start=1):
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError:
            raise EdgeParseError(line_number, "line is not valid UTF-8") from None


def format_edge_lines(edges: Iterable[TimestampedEdge]) -> Iterator[str]:
    """Whitespace-separated "src dst time" lines under a comment header."""
    yield "# src dst time\n"
    for edge in edges:
        stamp = int(edge.timestamp) if float(edge.timestamp).is_integer() else edge.timestamp
        yield f"{edge.src} {edge.dst} {stamp}\n"


class EdgeStreamRepository:
    """Reads and writes one edge-list file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def exists(self) -> bool:
        return self.path.is_file()

    def load(
        self,
        columns: str = "src,dst,time",
        delimiter: Delimiter = "auto",
    ) -> list[TimestampedEdge]:
        """
        Read the edge list; raw ids and file order are preserved.

        Raises:
            FileNotFoundError: If the file does not exist
            EdgeParseError: On a malformed or undecodable line
            EmptyEdgeStreamError: If the file holds no edge
        """
        if not self.exists():
            raise FileNotFoundError(f"Edge stream not found: {self.path}")
        with self.path.open("rb") as handle:
            edges = parse_edge_lines(_decoded(handle), columns, delimiter)
        logger.info(f"Loaded {len(edges)} edges from {self.path}")
        return edges

    def save(self, edges: Iterable[TimestampedEdge]) -> Path:
        """
        Write `edges` in the layout `load` reads by default.

        Raises:
            ExportError: If the file cannot be written
        """
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("w", encoding="utf-8") as handle:
                handle.writelines(format_edge_lines(edges))
        except OSError as exc:
            raise ExportError(f"Cannot write {self.path}: {exc}") from exc
        return self.path
