"""
Regularization Models

Anchor sets for the consistency term and the archive of past temporal
attention matrices used as negatives by the continuity term.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class AnchorSet:
    """
    Anchors of one snapshot with one positive and a set of negatives each.

    An anchor whose `positive` is None has no usable neighbour.
    """

    anchors: tuple[int, ...]
    positives: tuple[int | None, ...]
    negatives: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.anchors)


def pad_matrix(matrix: NDArray[np.float64], size: int) -> NDArray[np.float64]:
    """Zero-pad a b x b matrix to size x size (top-left aligned)."""
    padded = np.zeros((size, size))
    b = matrix.shape[0]
    padded[:b, :b] = matrix
    return padded


class AttentionHistory:
    """
    Archive of per-node temporal attention keyed by (snapshot, node).

    Capacity is counted in snapshots; the oldest snapshot is evicted first.
    Matrices are stored zero-padded to `matrix_size`.
    """

    def __init__(self, capacity: int, matrix_size: int):
        self.capacity = capacity
        self.matrix_size = matrix_size
        self._archive: OrderedDict[int, dict[int, NDArray[np.float64]]] = OrderedDict()

    def __len__(self) -> int:
        return len(self._archive)

    def __contains__(self, key: tuple[int, int]) -> bool:
        snapshot, node = key
        return snapshot in self._archive and node in self._archive[snapshot]

    @property
    def snapshots(self) -> list[int]:
        return list(self._archive)

    def put(self, snapshot: int, node: int, matrix: NDArray[np.float64]) -> None:
        if snapshot not in self._archive:
            self._archive[snapshot] = {}
            while len(self._archive) > self.capacity:
                self._archive.popitem(last=False)
        stored = pad_matrix(np.asarray(matrix, dtype=np.float64), self.matrix_size)
        stored.setflags(write=False)
        self._archive[snapshot][node] = stored

    def get(self, snapshot: int, node: int) -> NDArray[np.float64] | None:
        return self._archive.get(snapshot, {}).get(node)

    def negatives(self, node: int, exclude: set[int]) -> list[NDArray[np.float64]]:
        """Archived matrices of `node` at snapshots outside `exclude`, oldest first."""
        return [
            by_node[node]
            for snapshot, by_node in self._archive.items()
            if snapshot not in exclude and node in by_node
        ]
