"""
Assembled Model

Backbone, explainer and link head wired into one encode -> explain -> predict
pipeline.
"""

from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from dyexplainer.models.buffer import EmbeddingBuffer, NodeState
from dyexplainer.models.graph import Snapshot
from dyexplainer.modules.backbone import Backbone
from dyexplainer.modules.base import Module
from dyexplainer.modules.explainer import Explainer, Explanation, GateMode
from dyexplainer.modules.head import LinkHead
from dyexplainer.numerics.tensor import Tensor
from dyexplainer.schemas.config import RunConfig


@dataclass(frozen=True, eq=False)
class ForwardResult:
    """One pipeline pass: the state after encoding, H^(t) and the explanation."""

    state: NodeState
    hidden: Tensor
    explanation: Explanation

    @property
    def embeddings(self) -> Tensor:
        return self.explanation.embeddings


def buffer_entries(
    buffer: EmbeddingBuffer,
    current: tuple[Snapshot, Tensor] | None = None,
) -> list[tuple[Snapshot, Tensor]]:
    """
    Buffered (snapshot, H) pairs as constant tensors, oldest first.

    With `current`, the result is what the buffer would hold after pushing
    it: the oldest entry is dropped when the buffer is full.
    """
    entries = [(entry.snapshot, Tensor(entry.embedding)) for entry in buffer]
    if current is None:
        return entries
    if len(entries) >= buffer.capacity:
        entries = entries[len(entries) - buffer.capacity + 1 :]
    return [*entries, current]


class DyExplainerModel:
    """The three trainable components and their shared configuration."""

    def __init__(self, config: RunConfig, input_dim: int, seed: int | None = None):
        self.config = config
        rng = np.random.default_rng(config.seed if seed is None else seed)
        self.backbone = Backbone(config.backbone, input_dim, rng)
        self.explainer = Explainer(config.explainer, config.backbone.hidden_dim, rng)
        self.head = LinkHead(config.explainer.temporal_dim, config.train.link_hidden_dim, rng)

    @property
    def modules(self) -> tuple[Module, ...]:
        return (self.backbone, self.explainer, self.head)

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for module in self.modules:
            params.update(module.parameters())
        return params

    def state_dict(self) -> dict[str, NDArray[np.float64]]:
        return {name: tensor.numpy() for name, tensor in self.parameters().items()}

    def load_state_dict(self, state: Mapping[str, NDArray[np.float64]]) -> None:
        for module in self.modules:
            module.load_state_dict(state)

    def freeze(self, *modules: Module) -> None:
        """Make only the given modules trainable."""
        for module in self.modules:
            module.set_trainable(module in modules)

    # ==================== Pipeline ====================

    def explain(
        self,
        buffer: EmbeddingBuffer,
        mode: GateMode = "deterministic",
        rng: np.random.Generator | None = None,
        tau: float | None = None,
    ) -> Explanation:
        """Explain the buffer as it is."""
        return self.explainer.explain(buffer_entries(buffer), mode, rng, tau)

    def forward(
        self,
        state: NodeState,
        buffer: EmbeddingBuffer,
        snapshot: Snapshot,
        mode: GateMode = "deterministic",
        rng: np.random.Generator | None = None,
        tau: float | None = None,
    ) -> ForwardResult:
        """Encode `snapshot` from `state` and explain the buffer with it pushed."""
        new_state, hidden = self.backbone.encode(state, snapshot)
        entries = buffer_entries(buffer, (snapshot, hidden))
        explanation = self.explainer.explain(entries, mode, rng, tau)
        return ForwardResult(new_state, hidden, explanation)

    def link_logits(self, embeddings: Tensor, src: ArrayLike, dst: ArrayLike) -> Tensor:
        return self.head.link_logits(embeddings, src, dst)

    def link_scores(self, embeddings: Tensor, src: ArrayLike, dst: ArrayLike) -> Tensor:
        return self.head.link_scores(embeddings, src, dst)
