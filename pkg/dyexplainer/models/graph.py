"""
Dynamic Graph Models

Timestamped edges, snapshots over a shared node universe, and the ordered
dynamic graph built from them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import NDArray
from scipy import sparse

from dyexplainer.core.exceptions import NodeIndexError


@dataclass(frozen=True)
class TimestampedEdge:
    """One raw edge event from a stream."""

    src: int
    dst: int
    timestamp: float
    weight: float | None = None
    label: int | None = None


@dataclass(frozen=True)
class NodeIndex:
    """Bidirectional map between raw node ids and dense indices 0..N-1."""

    raw_ids: tuple[int, ...]

    @cached_property
    def _dense(self) -> dict[int, int]:
        return {raw: dense for dense, raw in enumerate(self.raw_ids)}

    def __len__(self) -> int:
        return len(self.raw_ids)

    def __contains__(self, raw_id: object) -> bool:
        return raw_id in self._dense

    def to_dense(self, raw_id: int) -> int:
        return self._dense[raw_id]

    def to_raw(self, dense: int) -> int:
        return self.raw_ids[dense]


@dataclass(frozen=True, eq=False)
class Snapshot:
    """
    The graph observed in one time bucket.

    Edges are directed (src, dst) pairs in dense indices, unique and sorted.
    """

    index: int
    num_nodes: int
    src: NDArray[np.int64]
    dst: NDArray[np.int64]
    weights: NDArray[np.float64]
    features: NDArray[np.float64]
    t_start: float = 0.0
    t_end: float = 0.0
    num_events: int = 0

    def __post_init__(self) -> None:
        for array in (self.src, self.dst, self.weights, self.features):
            array.setflags(write=False)

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), strict=True))

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(self.edges)

    @cached_property
    def _neighbor_lists(self) -> list[list[int]]:
        buckets: list[set[int]] = [set() for _ in range(self.num_nodes)]
        for s, d in zip(self.src.tolist(), self.dst.tolist(), strict=True):
            buckets[s].add(d)
            buckets[d].add(s)
        return [sorted(b) for b in buckets]

    @cached_property
    def out_neighbors(self) -> list[frozenset[int]]:
        buckets: list[set[int]] = [set() for _ in range(self.num_nodes)]
        for s, d in zip(self.src.tolist(), self.dst.tolist(), strict=True):
            buckets[s].add(d)
        return [frozenset(b) for b in buckets]

    @cached_property
    def symmetric_adjacency(self) -> sparse.csr_matrix:
        """Binary adjacency of the symmetrized neighbourhoods."""
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        matrix = sparse.coo_matrix(
            (np.ones(rows.shape[0]), (rows, cols)), shape=(self.num_nodes, self.num_nodes)
        ).tocsr()
        matrix.data[:] = 1.0
        return matrix

    def neighbors(self, node: int) -> list[int]:
        """
        Symmetrized neighbourhood of `node`, ascending.

        Raises:
            NodeIndexError: If `node` is outside the node universe
        """
        if node < 0 or node >= self.num_nodes:
            raise NodeIndexError(node, self.num_nodes)
        return list(self._neighbor_lists[node])

    def with_edges(self, keep: NDArray[np.bool_]) -> Snapshot:
        """Copy restricted to the edges flagged in `keep`, preserving order."""
        return Snapshot(
            index=self.index,
            num_nodes=self.num_nodes,
            src=self.src[keep].copy(),
            dst=self.dst[keep].copy(),
            weights=self.weights[keep].copy(),
            features=self.features,
            t_start=self.t_start,
            t_end=self.t_end,
            num_events=int(np.count_nonzero(keep)),
        )


@dataclass(frozen=True, eq=False)
class DynamicGraph:
    """Ordered snapshots over one node universe."""

    snapshots: tuple[Snapshot, ...]
    node_index: NodeIndex
    feature_dim: int
    metadata: dict[str, object] = field(default_factory=dict)

    @property
    def num_nodes(self) -> int:
        return len(self.node_index)

    @property
    def num_snapshots(self) -> int:
        return len(self.snapshots)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, index: int) -> Snapshot:
        return self.snapshots[index]

    def summary(self) -> dict[str, object]:
        """JSON-ready summary: node count, per-snapshot edge counts and time ranges."""
        return {
            "num_nodes": self.num_nodes,
            "num_snapshots": self.num_snapshots,
            "feature_dim": self.feature_dim,
            "snapshots": [
                {
                    "index": s.index,
                    "num_edges": s.num_edges,
                    "num_events": s.num_events,
                    "t_start": s.t_start,
                    "t_end": s.t_end,
                }
                for s in self.snapshots
            ],
        }

    def to_bytes(self) -> bytes:
        """Canonical serialization; equal graphs give equal bytes."""
        payload = {
            "raw_ids": list(self.node_index.raw_ids),
            "feature_dim": self.feature_dim,
            "snapshots": [
                {
                    "index": s.index,
                    "src": s.src.tolist(),
                    "dst": s.dst.tolist(),
                    "weights": s.weights.tolist(),
                    "features": s.features.tolist(),
                    "t_start": s.t_start,
                    "t_end": s.t_end,
                    "num_events": s.num_events,
                }
                for s in self.snapshots
            ],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
