"""
Domain Models Package

Exports the entities shared by services, modules and repositories.
"""

from dyexplainer.models.attention import (
    ExplanationMask,
    StructuralAttention,
    TemporalAttention,
)
from dyexplainer.models.buffer import BufferEntry, EmbeddingBuffer, NodeState
from dyexplainer.models.graph import DynamicGraph, NodeIndex, Snapshot, TimestampedEdge
from dyexplainer.models.history import AnchorSet, AttentionHistory

__all__ = [
    # Graph
    "TimestampedEdge",
    "NodeIndex",
    "Snapshot",
    "DynamicGraph",
    # Backbone state
    "NodeState",
    "BufferEntry",
    "EmbeddingBuffer",
    # Explanations
    "StructuralAttention",
    "TemporalAttention",
    "ExplanationMask",
    # Regularization
    "AnchorSet",
    "AttentionHistory",
]
