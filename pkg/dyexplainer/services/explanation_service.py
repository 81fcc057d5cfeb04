"""
Explanation Service

Top-k edge masks from structural attention, fidelity and sparsity scores,
and sweeps of fidelity over a sparsity grid. A masked snapshot is re-encoded
from the same previous node state; older buffered embeddings are reused as
they are.
"""

import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from dyexplainer.core.exceptions import EmptyEvaluationSetError
from dyexplainer.core.logging import get_logger
from dyexplainer.models.attention import ExplanationMask, StructuralAttention
from dyexplainer.models.buffer import EmbeddingBuffer, NodeState
from dyexplainer.models.graph import DynamicGraph, Snapshot
from dyexplainer.modules.model import DyExplainerModel
from dyexplainer.numerics.tensor import Tensor
from dyexplainer.schemas.metrics import SweepRow
from dyexplainer.services.evaluation_service import sample_negative_destinations
from dyexplainer.services.training_service import LiveUpdateResult

logger = get_logger(__name__)

EdgeArrays = tuple[NDArray[np.int64], NDArray[np.int64]]


@dataclass(frozen=True, eq=False)
class ExplanationContext:
    """A frozen predictor positioned just before `snapshot` was encoded."""

    model: DyExplainerModel
    state: NodeState
    buffer: EmbeddingBuffer
    snapshot: Snapshot

    @classmethod
    def from_result(
        cls,
        result: LiveUpdateResult,
        graph: DynamicGraph,
        index: int | None = None,
    ) -> "ExplanationContext":
        """Context for snapshot `index`, by default the last one the pipeline encoded."""
        index = result.last_snapshot if index is None else index
        state, buffer = result.position(graph, index)
        return cls(model=result.model, state=state, buffer=buffer, snapshot=graph[index])

    def probabilities(self, variant: Snapshot, edges: EdgeArrays) -> NDArray[np.float64]:
        """Predicted probabilities of `edges` when `variant` replaces the snapshot."""
        result = self.model.forward(self.state, self.buffer, variant)
        return self.model.link_scores(result.embeddings, edges[0], edges[1]).numpy()

    def attention(self) -> StructuralAttention:
        """Deterministic structural attention of the snapshot."""
        return self.model.forward(self.state, self.buffer, self.snapshot).explanation.latest


def topk_edge_mask(att: StructuralAttention, target_sparsity: float) -> ExplanationMask:
    """
    Keep the ceil((1 - s) * |E|) highest-gate edges, ties by (src, dst).

    Raises:
        EmptyEvaluationSetError: If the snapshot has no edges
    """
    total = att.num_edges
    if total == 0:
        raise EmptyEvaluationSetError(f"Snapshot {att.index} has no edges to mask")
    k = math.ceil(round((1.0 - target_sparsity) * total, 9))
    if k < 1:
        logger.warning(
            f"Sparsity {target_sparsity} keeps no edge of snapshot {att.index}; keeping one"
        )
        k = 1
    order = np.lexsort((att.dst, att.src, -att.values.data))[:k]
    order = np.sort(order)
    return ExplanationMask(
        index=att.index,
        src=att.src[order],
        dst=att.dst[order],
        total_edges=total,
        k=k,
        target_sparsity=target_sparsity,
    )


def sparsity(mask: ExplanationMask, snapshot: Snapshot) -> float:
    """Fraction of the snapshot's edges the mask leaves out."""
    if snapshot.num_edges == 0:
        raise EmptyEvaluationSetError(f"Snapshot {snapshot.index} has no edges")
    return 1.0 - mask.num_kept / snapshot.num_edges


def masked_snapshot(snapshot: Snapshot, mask: ExplanationMask) -> Snapshot:
    kept = mask.kept
    keep = np.array([edge in kept for edge in snapshot.edges], dtype=bool)
    return snapshot.with_edges(keep)


def evaluation_edges(
    future: Snapshot,
    rng: np.random.Generator,
    negatives_per_positive: int = 1,
) -> EdgeArrays:
    """Edges of `future` plus sampled corruptions of each, as (src, dst)."""
    if future.num_edges == 0:
        raise EmptyEvaluationSetError(f"Snapshot {future.index} has no edges to evaluate")
    if negatives_per_positive == 0:
        return future.src.copy(), future.dst.copy()
    corrupted = sample_negative_destinations(future, future.src, negatives_per_positive, rng)
    src = np.concatenate([future.src, np.repeat(future.src, negatives_per_positive)])
    dst = np.concatenate([future.dst, corrupted.ravel()])
    return src, dst


def _mean_abs_difference(a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    return math.fsum(np.abs(a - b).tolist()) / a.shape[0]


def fidelity(
    context: ExplanationContext,
    mask: ExplanationMask,
    eval_edges: EdgeArrays,
    original: NDArray[np.float64] | None = None,
) -> float:
    """
    Mean |p(original) - p(masked)| over the evaluation edges.

    Raises:
        EmptyEvaluationSetError: If `eval_edges` is empty
    """
    if eval_edges[0].shape[0] == 0:
        raise EmptyEvaluationSetError()
    if original is None:
        original = context.probabilities(context.snapshot, eval_edges)
    masked = context.probabilities(masked_snapshot(context.snapshot, mask), eval_edges)
    return _mean_abs_difference(original, masked)


def importance_attention(
    snapshot: Snapshot,
    scores: Mapping[tuple[int, int], float],
) -> StructuralAttention:
    """Structural attention from external edge scores; unscored edges get 0."""
    values = np.array([scores.get(edge, 0.0) for edge in snapshot.edges], dtype=np.float64)
    return StructuralAttention(
        index=snapshot.index,
        num_nodes=snapshot.num_nodes,
        src=snapshot.src,
        dst=snapshot.dst,
        values=Tensor(values),
    )


def fidelity_sweep(
    context: ExplanationContext,
    grid: Sequence[float],
    eval_edges: EdgeArrays,
    attention: StructuralAttention | None = None,
    threads: int = 1,
) -> list[SweepRow]:
    """
    One row per grid value (duplicates kept) using nested top-k masks of
    `attention`, which defaults to the model's own structural attention.
    """
    att = attention if attention is not None else context.attention()
    original = context.probabilities(context.snapshot, eval_edges)

    def score(target: float) -> SweepRow:
        mask = topk_edge_mask(att, target)
        return SweepRow(
            target_sparsity=target,
            sparsity=sparsity(mask, context.snapshot),
            fidelity=fidelity(context, mask, eval_edges, original),
            kept_edges=mask.num_kept,
        )

    if threads <= 1:
        return [score(target) for target in grid]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(score, grid))
