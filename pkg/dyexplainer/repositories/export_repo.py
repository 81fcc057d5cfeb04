"""
Export Repository

Writes run artifacts (attention CSVs, sweep tables, JSON-lines metrics, JSON
summaries) under one output directory, and reads external edge-importance
files in the structural attention schema.
"""

import csv
import json
from collections.abc import Iterable, Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any

from pydantic import BaseModel

from dyexplainer.core.exceptions import EdgeParseError, ExportError
from dyexplainer.core.logging import get_logger
from dyexplainer.models.attention import StructuralAttention, TemporalAttention
from dyexplainer.models.graph import NodeIndex, TimestampedEdge
from dyexplainer.repositories.edge_stream_repo import format_edge_lines

logger = get_logger(__name__)

STRUCTURAL_HEADER = ("snapshot", "src", "dst", "gate_value")
TEMPORAL_HEADER = ("node", "t_row", "t_col", "weight")
SWEEP_HEADER = ("sparsity", "fidelity")


def _dumps(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


class ExportRepository:
    """Artifact writer rooted at `output_dir`; remembers every file it wrote."""

    def __init__(self, output_dir: str | Path):
        self.output_dir = Path(output_dir)
        self.written: list[str] = []

    def path(self, name: str) -> Path:
        return self.output_dir / name

    @contextmanager
    def _open(self, name: str) -> Iterator[IO[str]]:
        target = self.path(name)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            with target.open("w", encoding="utf-8", newline="") as handle:
                yield handle
        except OSError as exc:
            raise ExportError(f"Cannot write {target}: {exc}") from exc
        if str(target) not in self.written:
            self.written.append(str(target))
        logger.debug(f"Wrote {target}")

    # ==================== Attention exports ====================

    def write_structural(
        self,
        name: str,
        attentions: Sequence[StructuralAttention],
        node_index: NodeIndex,
        track: Sequence[tuple[int, int]] | None = None,
    ) -> Path:
        """
        One row per (snapshot, edge) with raw node ids.

        With a tracking list (raw id pairs), every tracked edge gets a row for
        every snapshot, 0.0 where the edge is absent.
        """
        with self._open(name) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(STRUCTURAL_HEADER)
            for att in attentions:
                triples = att.triples()
                if track is None:
                    for s, d, value in triples:
                        writer.writerow(
                            (att.index, node_index.to_raw(s), node_index.to_raw(d), float(value))
                        )
                    continue
                gates = {
                    (node_index.to_raw(s), node_index.to_raw(d)): value for s, d, value in triples
                }
                for src, dst in track:
                    writer.writerow((att.index, src, dst, float(gates.get((src, dst), 0.0))))
        return self.path(name)

    def write_temporal(
        self,
        name: str,
        att: TemporalAttention,
        node_index: NodeIndex,
        nodes: Sequence[int] | None = None,
    ) -> Path:
        """Per-node attention matrices as long-format rows; `nodes` are dense ids."""
        selected = att.nodes.tolist() if nodes is None else list(nodes)
        with self._open(name) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(TEMPORAL_HEADER)
            for node in selected:
                matrix = att.matrix(node)
                raw = node_index.to_raw(node)
                for r, t_row in enumerate(att.steps):
                    for c, t_col in enumerate(att.steps):
                        writer.writerow((raw, t_row, t_col, float(matrix[r, c])))
        return self.path(name)

    def write_sweep(self, name: str, rows: Iterable[tuple[float, float]]) -> Path:
        with self._open(name) as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(SWEEP_HEADER)
            for sparsity_value, fidelity_value in rows:
                writer.writerow((float(sparsity_value), float(fidelity_value)))
        return self.path(name)

    def write_edges(self, name: str, edges: Iterable[TimestampedEdge]) -> Path:
        """Edge stream in the layout `EdgeStreamRepository.load` reads by default."""
        with self._open(name) as handle:
            handle.writelines(format_edge_lines(edges))
        return self.path(name)

    # ==================== JSON artifacts ====================

    def write_jsonl(
        self,
        name: str,
        records: Iterable[BaseModel],
        exclude: set[str] | None = None,
    ) -> Path:
        with self._open(name) as handle:
            for record in records:
                handle.write(_dumps(record.model_dump(mode="json", exclude=exclude)) + "\n")
        return self.path(name)

    def write_json(self, name: str, payload: BaseModel | dict[str, Any]) -> Path:
        data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else payload
        with self._open(name) as handle:
            handle.write(json.dumps(data, sort_keys=True, indent=2) + "\n")
        return self.path(name)


def read_importance_csv(
    path: str | Path,
    node_index: NodeIndex,
) -> dict[int, dict[tuple[int, int], float]]:
    """
    Load an external edge-importance file in the structural attention schema.

    Returns gate values keyed by snapshot, then by dense (src, dst). Edges
    whose endpoints are unknown to `node_index` are ignored.

    Raises:
        EdgeParseError: If a row is malformed
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Importance file not found: {path}")

    scores: dict[int, dict[tuple[int, int], float]] = {}
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        for line_number, row in enumerate(reader, start=1):
            if not row or row[0].startswith("#"):
                continue
            if line_number == 1 and row[0].strip() == STRUCTURAL_HEADER[0]:
                continue
            if len(row) < 4:
                raise EdgeParseError(line_number, f"expected 4 columns, got {len(row)}")
            try:
                snapshot, src, dst = (int(value) for value in row[:3])
                value = float(row[3])
            except ValueError:
                raise EdgeParseError(line_number, "non-numeric field") from None
            if src not in node_index or dst not in node_index:
                continue
            pair = (node_index.to_dense(src), node_index.to_dense(dst))
            scores.setdefault(snapshot, {})[pair] = value
    return scores
