"""
Explanation Models

Structural attention over a snapshot's edges, temporal attention over
buffered snapshots, and the binary edge masks derived from them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from dyexplainer.numerics.tensor import Tensor


@dataclass(frozen=True, eq=False)
class StructuralAttention:
    """Edge gates of one snapshot; support is exactly the snapshot's edge list."""

    index: int
    num_nodes: int
    src: NDArray[np.int64]
    dst: NDArray[np.int64]
    values: Tensor
    logits: Tensor | None = None

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def gates(self) -> NDArray[np.float64]:
        return self.values.numpy()

    def triples(self) -> list[tuple[int, int, float]]:
        return list(
            zip(self.src.tolist(), self.dst.tolist(), self.values.data.tolist(), strict=True)
        )

    def as_dense(self) -> NDArray[np.float64]:
        """N x N matrix with gates on the support and zeros elsewhere."""
        dense = np.zeros((self.num_nodes, self.num_nodes))
        dense[self.src, self.dst] = self.values.data
        return dense


@dataclass(frozen=True, eq=False)
class TemporalAttention:
    """
    Per-node attention between buffered snapshots.

    `values[r]` is the b x b matrix of node `nodes[r]`; `steps` are the
    snapshot ordinals of the buffer positions, oldest first.
    """

    values: Tensor
    mask: NDArray[np.bool_]
    steps: tuple[int, ...]
    nodes: NDArray[np.int64]

    @property
    def size(self) -> int:
        return len(self.steps)

    @property
    def snapshot(self) -> int:
        return self.steps[-1]

    def matrix(self, node: int) -> NDArray[np.float64]:
        row = int(np.flatnonzero(self.nodes == node)[0])
        return self.values.data[row]

    def mean_matrix(self) -> NDArray[np.float64]:
        """Attention averaged over nodes."""
        return self.values.data.mean(axis=0)


@dataclass(frozen=True)
class ExplanationMask:
    """Edges kept by an explanation for one snapshot, with provenance."""

    index: int
    src: NDArray[np.int64]
    dst: NDArray[np.int64]
    total_edges: int
    source: str = "structural_attention"
    k: int | None = None
    target_sparsity: float | None = None
    notes: dict[str, object] = field(default_factory=dict)

    @property
    def num_kept(self) -> int:
        return int(self.src.shape[0])

    @property
    def kept(self) -> frozenset[tuple[int, int]]:
        return frozenset(zip(self.src.tolist(), self.dst.tolist(), strict=True))
