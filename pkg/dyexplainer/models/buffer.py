"""
Backbone State Models

Hierarchical node state carried between snapshots and the FIFO buffer of
top-layer embeddings consumed by the explainer.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from dyexplainer.core.exceptions import BufferShapeError
from dyexplainer.models.graph import Snapshot


@dataclass(frozen=True)
class NodeState:
    """Per-layer embedding matrices H_l of the latest encoded snapshot."""

    layers: tuple[NDArray[np.float64], ...]

    @classmethod
    def zeros(cls, num_nodes: int, hidden_dim: int, num_layers: int) -> NodeState:
        return cls(tuple(np.zeros((num_nodes, hidden_dim)) for _ in range(num_layers)))

    @property
    def num_nodes(self) -> int:
        return int(self.layers[0].shape[0])


@dataclass(frozen=True)
class BufferEntry:
    """One buffered snapshot: its ordinal, graph and detached embedding H^(t)."""

    index: int
    snapshot: Snapshot
    embedding: NDArray[np.float64]


class EmbeddingBuffer:
    """FIFO of at most `capacity` embeddings, oldest first."""

    def __init__(self, capacity: int = 5):
        if capacity < 1:
            raise ValueError("buffer capacity must be at least 1")
        self.capacity = capacity
        self._entries: deque[BufferEntry] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[BufferEntry]:
        return iter(self._entries)

    def __getitem__(self, position: int) -> BufferEntry:
        return self._entries[position]

    @property
    def indices(self) -> list[int]:
        return [entry.index for entry in self._entries]

    def push(self, snapshot: Snapshot, embedding: NDArray[np.float64]) -> EmbeddingBuffer:
        """
        Append H^(t), evicting the oldest entry when full.

        Raises:
            BufferShapeError: If the row count differs from buffered embeddings
        """
        if self._entries and embedding.shape[0] != self._entries[0].embedding.shape[0]:
            raise BufferShapeError(
                f"Embedding has {embedding.shape[0]} rows, buffer holds "
                f"{self._entries[0].embedding.shape[0]}"
            )
        stored = np.array(embedding, dtype=np.float64, copy=True)
        stored.setflags(write=False)
        self._entries.append(BufferEntry(snapshot.index, snapshot, stored))
        return self

    def copy(self) -> EmbeddingBuffer:
        clone = EmbeddingBuffer(self.capacity)
        clone._entries.extend(self._entries)
        return clone
