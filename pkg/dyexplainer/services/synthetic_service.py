"""
Synthetic Service

Planted dynamic graphs with known causal edges and a known lag, the scores
that check explanations against them, and the multi-seed recovery
experiment.
"""

from collections.abc import Sequence

import numpy as np
from scipy.stats import rankdata

from dyexplainer.core.exceptions import GroundTruthError, InfeasibleSpecError
from dyexplainer.core.logging import get_logger
from dyexplainer.models.attention import StructuralAttention, TemporalAttention
from dyexplainer.models.graph import DynamicGraph, NodeIndex, TimestampedEdge
from dyexplainer.schemas.config import BucketPolicy, RunConfig
from dyexplainer.schemas.metrics import RecoveryReport, RecoveryRow
from dyexplainer.schemas.synthetic import GroundTruth, PlantedSpec
from dyexplainer.services.graph_service import FeatureMode, bucket_snapshots
from dyexplainer.services.training_service import live_update

logger = get_logger(__name__)

Pair = tuple[int, int]


def _pair_key(pair: Pair) -> str:
    return f"{pair[0]},{pair[1]}"


def _planted_pairs(spec: PlantedSpec, rng: np.random.Generator) -> tuple[list[Pair], ...]:
    """Disjoint motif, response, lagged-response and noise pools."""
    n = spec.num_nodes
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    planted = 3 * spec.motif_size
    if planted > len(pairs):
        raise InfeasibleSpecError(
            f"{planted} planted pairs do not fit in {len(pairs)} node pairs",
            details={"num_nodes": n, "motif_size": spec.motif_size},
        )
    noise_pool = len(pairs) - planted
    if spec.noise_edges_per_snapshot > noise_pool:
        raise InfeasibleSpecError(
            f"{spec.noise_edges_per_snapshot} noise edges per snapshot exceed the "
            f"{noise_pool} pairs left outside the motif",
            details={"noise_edges_per_snapshot": spec.noise_edges_per_snapshot},
        )
    order = rng.permutation(len(pairs))
    shuffled = [pairs[k] for k in order.tolist()]
    m = spec.motif_size
    motif = sorted(shuffled[:m])
    responses = shuffled[m : 2 * m]
    lagged = shuffled[2 * m : 3 * m]
    noise = sorted(shuffled[3 * m :])
    return motif, responses, lagged, noise


def generate_planted(
    spec: PlantedSpec,
    feature_mode: FeatureMode = "degree",
    feature_dim: int = 16,
) -> tuple[DynamicGraph, GroundTruth, list[TimestampedEdge]]:
    """
    Sample a planted dynamic graph; the edge at snapshot t has timestamp t.

    Every snapshot switches on at least one motif edge. The returned edges
    are the raw stream the graph was bucketed from.

    Raises:
        InfeasibleSpecError: If the motif, responses and noise do not fit
    """
    rng = np.random.default_rng(spec.seed if spec.seed is not None else 0)
    motif, responses, lagged, noise = _planted_pairs(spec, rng)
    response_of = dict(zip(motif, responses, strict=True))
    lagged_of = dict(zip(motif, lagged, strict=True))

    signal_edges: list[list[Pair]] = []
    response_edges: list[list[Pair]] = []
    edges: list[TimestampedEdge] = []
    for t in range(spec.num_snapshots):
        active = rng.random(len(motif)) < spec.activation_prob
        if not active.any():
            active[rng.integers(len(motif))] = True
        signals = [pair for pair, on in zip(motif, active.tolist(), strict=True) if on]

        triggered: set[Pair] = set()
        if t >= 1:
            for pair in signal_edges[t - 1]:
                if rng.random() < spec.p_signal:
                    triggered.add(response_of[pair])
        if t >= spec.lag + 1:
            for pair in signal_edges[t - spec.lag - 1]:
                if rng.random() < spec.p_signal:
                    triggered.add(lagged_of[pair])

        picked = rng.choice(len(noise), size=spec.noise_edges_per_snapshot, replace=False)
        noisy = [noise[k] for k in sorted(picked.tolist())]

        signal_edges.append(signals)
        response_edges.append(sorted(triggered))
        for src, dst in sorted({*signals, *triggered, *noisy}):
            edges.append(TimestampedEdge(src=src, dst=dst, timestamp=float(t)))

    graph = bucket_snapshots(edges, BucketPolicy(duration=1.0), feature_mode, feature_dim)
    graph.metadata["name"] = "planted"
    truth = GroundTruth(
        lag=spec.lag,
        signal_edges=signal_edges,
        response_edges=response_edges,
        motif=motif,
        response_map={_pair_key(p): r for p, r in response_of.items()},
        lagged_response_map={_pair_key(p): r for p, r in lagged_of.items()},
    )
    logger.info(
        f"Planted {len(edges)} edges over {spec.num_snapshots} snapshots "
        f"({len(motif)} motif edges, lag {spec.lag})"
    )
    return graph, truth, edges


# ==================== Scores ====================


def explanation_auc(
    att: StructuralAttention,
    truth: GroundTruth,
    snapshot: int,
    node_index: NodeIndex,
) -> float:
    """
    ROC AUC of the gates as a ranking of signal edges over all other edges of
    the snapshot. Ties count one half.

    Raises:
        GroundTruthError: If either class is empty at `snapshot`
    """
    if snapshot >= len(truth.signal_edges):
        raise GroundTruthError(f"No ground truth for snapshot {snapshot}")
    signal = {
        (node_index.to_dense(s), node_index.to_dense(d)) for s, d in truth.signal_edges[snapshot]
    }
    edges = zip(att.src.tolist(), att.dst.tolist(), strict=True)
    labels = np.array([edge in signal for edge in edges], dtype=bool)
    positives = int(labels.sum())
    negatives = labels.shape[0] - positives
    if positives == 0 or negatives == 0:
        raise GroundTruthError(
            f"Snapshot {snapshot} has {positives} signal and {negatives} other edges"
        )
    ranks = rankdata(att.values.data)
    wins = ranks[labels].sum() - positives * (positives + 1) / 2.0
    return float(wins / (positives * negatives))


def temporal_recovery(att: TemporalAttention | np.ndarray, lag: int) -> bool:
    """
    Whether the last row's heaviest off-diagonal column sits `lag` steps back.

    Accepts a TemporalAttention (averaged over its nodes) or a b x b matrix.
    A tie for the maximum counts as a miss.

    Raises:
        GroundTruthError: If the buffer is shorter than lag + 1
    """
    matrix = att.mean_matrix() if isinstance(att, TemporalAttention) else np.asarray(att)
    size = matrix.shape[0]
    if size < lag + 1:
        raise GroundTruthError(f"Buffer of {size} snapshots cannot show lag {lag}")
    history = matrix[-1, :-1]
    peak = history.max()
    if np.count_nonzero(history == peak) > 1:
        return False
    return (size - 1) - int(np.argmax(history)) == lag


# ==================== Experiment ====================


def recovery_experiment(
    spec: PlantedSpec,
    config: RunConfig,
    seeds: Sequence[int],
    last: int = 3,
    threads: int = 1,
) -> RecoveryReport:
    """
    Train on a freshly planted graph per seed and score the final explanation:
    mean explanation AUC over the last `last` buffered snapshots and whether
    the temporal attention singles out the planted lag.

    Raises:
        InfeasibleSpecError: If the lag does not fit in the buffer
    """
    if spec.lag >= config.train.buffer_size:
        raise InfeasibleSpecError(
            f"lag {spec.lag} needs a buffer larger than {config.train.buffer_size}"
        )
    rows: list[RecoveryRow] = []
    for seed in seeds:
        planted = spec.model_copy(update={"seed": seed})
        payload = config.model_dump()
        payload["seed"] = seed
        payload["train"]["seed"] = None
        payload["synthetic"] = {**planted.model_dump(), "seed": None}
        run_config = RunConfig.model_validate(payload)

        graph, truth, _ = generate_planted(
            planted, run_config.data.feature_mode, run_config.data.feature_dim
        )
        result = live_update(graph, run_config, threads=threads, progress=False)
        explanation = result.model.explain(result.buffer)

        scores: list[float] = []
        scored: list[int] = []
        for att in explanation.structural[-last:]:
            try:
                scores.append(explanation_auc(att, truth, att.index, graph.node_index))
                scored.append(att.index)
            except GroundTruthError as exc:
                logger.warning(f"Seed {seed}: {exc.message}")
        auc = float(np.mean(scores)) if scores else None
        recovered = temporal_recovery(explanation.temporal, spec.lag)
        rows.append(
            RecoveryRow(
                seed=seed,
                explanation_auc=auc,
                temporal_recovered=recovered,
                scored_snapshots=scored,
            )
        )
        logger.info(f"Seed {seed}: auc={auc} temporal_recovered={recovered}")

    aucs = [row.explanation_auc for row in rows if row.explanation_auc is not None]
    return RecoveryReport(
        rows=rows,
        mean_auc=float(np.mean(aucs)) if aucs else None,
        recovery_rate=sum(row.temporal_recovered for row in rows) / len(rows) if rows else 0.0,
    )

