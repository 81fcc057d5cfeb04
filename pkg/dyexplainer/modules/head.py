"""
Link Prediction Head

Two-layer perceptron scoring a directed node pair from its refined
embeddings.
"""

import numpy as np
from numpy.typing import ArrayLike

from dyexplainer.core.exceptions import NodeIndexError
from dyexplainer.modules.base import Module
from dyexplainer.numerics import ops
from dyexplainer.numerics.init import glorot_uniform
from dyexplainer.numerics.tensor import Tensor


class LinkHead(Module):
    """Maps [h'_i || h'_j] (2K) through a hidden layer to one logit."""

    prefix = "head"

    def __init__(self, embedding_dim: int, hidden_dim: int, rng: np.random.Generator):
        super().__init__()
        self.embedding_dim = embedding_dim
        self.register("W1", glorot_uniform(rng, (hidden_dim, 2 * embedding_dim)))
        self.register("b1", np.zeros(hidden_dim))
        self.register("W2", glorot_uniform(rng, (1, hidden_dim)))
        self.register("b2", np.zeros(1))

    def link_logits(self, embeddings: Tensor, src: ArrayLike, dst: ArrayLike) -> Tensor:
        """
        Logits for the pairs (src[k], dst[k]).

        Raises:
            NodeIndexError: If a node index is outside the embedding rows
        """
        sources = np.asarray(src, dtype=np.int64)
        targets = np.asarray(dst, dtype=np.int64)
        num_nodes = embeddings.shape[0]
        for nodes in (sources, targets):
            if nodes.size and (nodes.min() < 0 or nodes.max() >= num_nodes):
                bad = int(nodes.min()) if nodes.min() < 0 else int(nodes.max())
                raise NodeIndexError(bad, num_nodes)
        pairs = ops.concat([ops.take(embeddings, sources), ops.take(embeddings, targets)], axis=1)
        hidden = ops.relu(ops.add(ops.matmul(pairs, self["W1"].T), self["b1"]))
        logits = ops.add(ops.matmul(hidden, self["W2"].T), self["b2"])
        return ops.reshape(logits, (sources.shape[0],))

    def link_scores(self, embeddings: Tensor, src: ArrayLike, dst: ArrayLike) -> Tensor:
        """Edge probabilities sigma(logit)."""
        return ops.sigmoid(self.link_logits(embeddings, src, dst))
