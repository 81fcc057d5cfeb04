"""
Evaluation Service

Link-prediction losses and ranking metrics: negative sampling, binary
cross-entropy against the next snapshot, mean reciprocal rank and the
headline report over the tail of a run.
"""

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.typing import NDArray

from dyexplainer.core.exceptions import EmptyEvaluationSetError
from dyexplainer.core.logging import get_logger
from dyexplainer.models.graph import Snapshot
from dyexplainer.modules.head import LinkHead
from dyexplainer.numerics import ops
from dyexplainer.numerics.tensor import Tensor
from dyexplainer.schemas.metrics import MetricsRecord, RunSummary

logger = get_logger(__name__)

HEADLINE_FRACTION = 0.6

# Published link-prediction MRR (mean, std) for the benchmark streams.
REFERENCE_MRR: dict[str, tuple[float, float | None]] = {
    "as-733": (0.341, None),
    "reddit-title": (0.383, None),
    "reddit-body": (0.335, None),
    "uci-message": (0.109, None),
    "bitcoin-otc": (0.194, None),
    "bitcoin-alpha": (0.164, 0.002),
}


def reference_mrr(dataset: str | None) -> tuple[float, float | None] | None:
    """Published value for a dataset name such as "Bitcoin-Alpha" or "bitcoin_alpha"."""
    if not dataset:
        return None
    key = dataset.strip().lower().replace("_", "-").replace(" ", "-")
    return REFERENCE_MRR.get(key)


# ==================== Negative sampling ====================


def sample_negative_destinations(
    snapshot: Snapshot,
    sources: NDArray[np.int64],
    per_source: int,
    rng: np.random.Generator,
) -> NDArray[np.int64]:
    """
    For each source, `per_source` uniform destinations it has no edge to.

    Returns a len(sources) x per_source matrix. Sampling is with replacement;
    a source linked to every node falls back to uniform destinations.
    """
    num_nodes = snapshot.num_nodes
    out_neighbors = snapshot.out_neighbors
    result = np.empty((sources.shape[0], per_source), dtype=np.int64)
    for row, source in enumerate(sources.tolist()):
        taken = out_neighbors[source]
        if len(taken) >= num_nodes:
            result[row] = rng.integers(0, num_nodes, size=per_source)
            continue
        if len(taken) * 4 < num_nodes:
            # rejection sampling stays cheap on sparse rows
            drawn: list[int] = []
            while len(drawn) < per_source:
                candidates = rng.integers(0, num_nodes, size=per_source)
                drawn.extend(c for c in candidates.tolist() if c not in taken)
            result[row] = drawn[:per_source]
        else:
            free = np.setdiff1d(np.arange(num_nodes), np.fromiter(taken, dtype=np.int64))
            result[row] = rng.choice(free, size=per_source, replace=True)
    return result


def bce_with_negatives(
    embeddings: Tensor,
    future: Snapshot,
    head: LinkHead,
    rng: np.random.Generator,
    negatives_per_positive: int = 1,
) -> Tensor:
    """
    Mean binary cross-entropy of the future edges (label 1) and, per edge,
    `negatives_per_positive` corrupted destinations with the same source.

    Raises:
        EmptyEvaluationSetError: If the future snapshot has no edges
    """
    if future.num_edges == 0:
        raise EmptyEvaluationSetError(f"Snapshot {future.index} has no edges to train on")
    corrupted = sample_negative_destinations(future, future.src, negatives_per_positive, rng)
    src = np.concatenate([future.src, np.repeat(future.src, negatives_per_positive)])
    dst = np.concatenate([future.dst, corrupted.ravel()])
    labels = np.concatenate([np.ones(future.num_edges), np.zeros(corrupted.size)])
    return ops.binary_cross_entropy(head.link_scores(embeddings, src, dst), labels)


# ==================== Ranking ====================


def reciprocal_ranks(
    positive_scores: NDArray[np.float64],
    negative_scores: NDArray[np.float64],
) -> NDArray[np.float64]:
    """
    1 / rank of each positive among its row of negatives.

    Ties rank the positive below the tied negatives.
    """
    positive = np.asarray(positive_scores, dtype=np.float64).reshape(-1, 1)
    beaten_by = np.sum(np.asarray(negative_scores) >= positive, axis=1)
    return 1.0 / (1.0 + beaten_by)


def _score_chunk(
    head: LinkHead,
    embeddings: Tensor,
    src: NDArray[np.int64],
    dst: NDArray[np.int64],
    corrupted: NDArray[np.int64],
) -> NDArray[np.float64]:
    positive = head.link_logits(embeddings, src, dst).data
    num_negatives = corrupted.shape[1]
    negative = head.link_logits(
        embeddings, np.repeat(src, num_negatives), corrupted.ravel()
    ).data.reshape(-1, num_negatives)
    return reciprocal_ranks(positive, negative)


def mrr(
    embeddings: Tensor,
    future: Snapshot,
    head: LinkHead,
    num_negatives: int,
    rng: np.random.Generator,
    threads: int = 1,
) -> float:
    """
    Mean reciprocal rank of each future edge among `num_negatives` corruptions
    (i, j') with j' uniform over the non-neighbours of i.

    Scoring may fan out over `threads`; the sampled negatives and the result
    do not depend on the thread count.

    Raises:
        EmptyEvaluationSetError: If the future snapshot has no edges
    """
    if future.num_edges == 0:
        raise EmptyEvaluationSetError(f"Snapshot {future.index} has no edges to rank")
    corrupted = sample_negative_destinations(future, future.src, num_negatives, rng)
    detached = embeddings.detach()

    if threads <= 1 or future.num_edges < 2 * threads:
        ranks = _score_chunk(head, detached, future.src, future.dst, corrupted)
        return float(np.mean(ranks))

    bounds = np.array_split(np.arange(future.num_edges), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(
            pool.map(
                lambda idx: _score_chunk(
                    head, detached, future.src[idx], future.dst[idx], corrupted[idx]
                ),
                bounds,
            )
        )
    return float(np.mean(np.concatenate(parts)))


# ==================== Reporting ====================


def headline_window(
    records: Sequence[MetricsRecord],
    fraction: float = HEADLINE_FRACTION,
) -> list[MetricsRecord]:
    """The most recent `fraction` of records that carry an MRR."""
    evaluated = [record for record in records if record.mrr is not None]
    if not evaluated:
        return []
    count = max(1, math.ceil(round(fraction * len(evaluated), 9)))
    return evaluated[-count:]


def summarize_run(records: Sequence[MetricsRecord], dataset: str | None = None) -> RunSummary:
    """Headline MRR over the final 60% of evaluated snapshots, with the published value."""
    window = headline_window(records)
    headline = float(np.mean([r.mrr for r in window])) if window else None
    reference = reference_mrr(dataset)
    summary = RunSummary(
        dataset=dataset,
        headline_mrr=headline,
        evaluated_snapshots=sum(1 for r in records if r.mrr is not None),
        headline_snapshots=[r.snapshot for r in window],
        reference_mrr=reference[0] if reference else None,
        reference_std=reference[1] if reference else None,
    )
    if headline is None:
        logger.warning("No snapshot was evaluated; headline MRR is absent")
    return summary
