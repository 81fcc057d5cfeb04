"""
Contrastive Regularizers

Consistency pulls the structural attention rows of connected nodes together;
continuity pulls a node's temporal attention towards its recent past and away
from distant history. Both share one contrastive term.
"""

from collections.abc import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from dyexplainer.core.exceptions import AnchorSelectionError, RegularizationWeightError, ShapeError
from dyexplainer.core.logging import get_logger
from dyexplainer.models.attention import StructuralAttention, TemporalAttention
from dyexplainer.models.graph import Snapshot
from dyexplainer.models.history import AnchorSet, AttentionHistory, pad_matrix
from dyexplainer.numerics import ops
from dyexplainer.numerics.tensor import Tensor

logger = get_logger(__name__)


def contrastive_term(similarities: Tensor, temperature: float = 1.0) -> Tensor:
    """
    -log(exp(s_p) / sum(exp(s))) where s_p is the first similarity.

    The remaining entries are the negatives.
    """
    scaled = ops.div(similarities, temperature) if temperature != 1.0 else similarities
    return ops.sub(ops.logsumexp(scaled, axis=0), ops.take(scaled, 0))


def sample_anchors(
    snapshot: Snapshot,
    rng: np.random.Generator,
    num_anchors: int = 32,
    num_negatives: int = 8,
    candidates: Sequence[int] | None = None,
) -> AnchorSet:
    """
    Draw anchors with one connected positive and unconnected negatives each.

    Anchors default to nodes with at least one out-edge. A positive p
    satisfies (i, p) in the snapshot; negatives j != i satisfy (i, j) not in it.
    """
    out_neighbors = snapshot.out_neighbors
    if candidates is None:
        pool = np.array([n for n in range(snapshot.num_nodes) if out_neighbors[n]], dtype=np.int64)
    else:
        pool = np.asarray(candidates, dtype=np.int64)
    if pool.size == 0:
        return AnchorSet((), (), ())

    chosen = np.sort(rng.choice(pool, size=min(num_anchors, pool.size), replace=False))
    all_nodes = np.arange(snapshot.num_nodes)
    anchors, positives, negatives = [], [], []
    for node in chosen.tolist():
        connected = sorted(out_neighbors[node])
        positive = int(rng.choice(connected)) if connected else None
        excluded = np.array([node, *connected], dtype=np.int64)
        free = np.setdiff1d(all_nodes, excluded)
        picked = rng.choice(free, size=min(num_negatives, free.size), replace=False)
        anchors.append(node)
        positives.append(positive)
        negatives.append(tuple(int(j) for j in np.sort(picked)))
    return AnchorSet(tuple(anchors), tuple(positives), tuple(negatives))


def _attention_rows(att: StructuralAttention, nodes: list[int]) -> Tensor:
    """Dense length-N gate rows for `nodes`, zeros off the support."""
    position = {node: k for k, node in enumerate(nodes)}
    keep = np.flatnonzero(np.isin(att.src, nodes))
    slots = np.array(
        [position[int(s)] * att.num_nodes + int(d) for s, d in zip(att.src[keep], att.dst[keep])],
        dtype=np.int64,
    )
    flat = ops.scatter_add(ops.take(att.values, keep), slots, len(nodes) * att.num_nodes)
    return ops.reshape(flat, (len(nodes), att.num_nodes))


def consistency_loss(
    att: StructuralAttention,
    anchors: AnchorSet,
    temperature: float = 1.0,
) -> Tensor:
    """
    Mean contrastive loss over anchors using cosine similarity of attention rows.

    Raises:
        AnchorSelectionError: If no anchor has a positive
    """
    usable = [k for k, positive in enumerate(anchors.positives) if positive is not None]
    skipped = len(anchors) - len(usable)
    if skipped:
        logger.warning(f"Skipped {skipped} anchors without a connected positive")
    if not usable:
        raise AnchorSelectionError(f"No usable anchor in snapshot {att.index}")

    nodes = sorted(
        {anchors.anchors[k] for k in usable}
        | {int(anchors.positives[k]) for k in usable}  # type: ignore[arg-type]
        | {j for k in usable for j in anchors.negatives[k]}
    )
    position = {node: k for k, node in enumerate(nodes)}
    rows = _attention_rows(att, nodes)

    terms = []
    for k in usable:
        others = [anchors.positives[k], *anchors.negatives[k]]
        left = ops.take(rows, [position[anchors.anchors[k]]] * len(others))
        right = ops.take(rows, [position[int(j)] for j in others])  # type: ignore[arg-type]
        terms.append(contrastive_term(ops.cosine_similarity(left, right), temperature))
    return ops.mean(ops.stack(terms))


def _flatten_padded(matrix: Tensor, size: int) -> Tensor:
    """Differentiable flatten of a b x b matrix zero-padded to size x size."""
    b = matrix.shape[0]
    if b > size:
        raise ShapeError(f"Attention matrix of size {b} exceeds the history size {size}")
    flat = ops.reshape(matrix, (b * b,))
    if b == size:
        return flat
    rows, cols = np.indices((b, b))
    return ops.scatter_add(flat, (rows * size + cols).ravel(), size * size)


def continuity_loss(
    current: TemporalAttention,
    positives: Mapping[int, NDArray[np.float64]],
    history: AttentionHistory,
    nodes: Sequence[int],
    exclude: set[int],
    temperature: float = 1.0,
) -> Tensor:
    """
    Mean contrastive loss over `nodes` on flattened temporal attention.

    The positive of node i is its matrix at a nearby step inside the window
    (`positives[i]`); negatives are its archived matrices at snapshots outside
    `exclude`. Nodes lacking either are skipped; with none left the loss is 0.
    """
    size = history.matrix_size
    row_of = {int(node): r for r, node in enumerate(current.nodes.tolist())}
    terms = []
    for node in nodes:
        positive = positives.get(node)
        negatives = history.negatives(node, exclude)
        if positive is None or not negatives:
            continue
        anchor = _flatten_padded(ops.take(current.values, row_of[node]), size)
        targets = np.stack(
            [pad_matrix(positive, size).ravel(), *(n.ravel() for n in negatives)]
        )
        left = ops.take(ops.reshape(anchor, (1, size * size)), np.zeros(len(targets), dtype=int))
        similarities = ops.cosine_similarity(left, Tensor(targets))
        terms.append(contrastive_term(similarities, temperature))

    if not terms:
        logger.warning(
            f"No archived temporal attention outside the buffer at snapshot {current.snapshot}; "
            "continuity loss is 0"
        )
        return Tensor(0.0)
    return ops.mean(ops.stack(terms))


def total_loss(
    l_ce: Tensor,
    l_cons: Tensor,
    l_cont: Tensor,
    alpha: float,
    beta: float,
) -> Tensor:
    """
    (1 - alpha - beta) * ce + alpha * cons + beta * cont.

    Raises:
        RegularizationWeightError: If a weight is negative or alpha + beta > 1
    """
    if alpha < 0 or beta < 0 or alpha + beta > 1:
        raise RegularizationWeightError(alpha, beta)
    weighted = ops.mul(l_ce, 1.0 - alpha - beta)
    weighted = ops.add(weighted, ops.mul(l_cons, alpha))
    return ops.add(weighted, ops.mul(l_cont, beta))
