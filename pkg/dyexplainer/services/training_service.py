"""
Training Service

The buffer-based live-update loop. For every snapshot t the model first
predicts the edges of t+1, then trains the backbone and head on them with
early stopping, pushes H^(t) into the buffer and fine-tunes the attention
modules and head against the regularized objective.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from tqdm import tqdm

from dyexplainer.core.exceptions import (
    BucketingError,
    CheckpointFormatError,
    EmptyEvaluationSetError,
)
from dyexplainer.core.logging import get_logger
from dyexplainer.models.attention import StructuralAttention, TemporalAttention
from dyexplainer.models.buffer import EmbeddingBuffer, NodeState
from dyexplainer.models.graph import DynamicGraph, Snapshot
from dyexplainer.models.history import AttentionHistory
from dyexplainer.modules.model import DyExplainerModel
from dyexplainer.modules.regularizers import (
    consistency_loss,
    continuity_loss,
    sample_anchors,
    total_loss,
)
from dyexplainer.numerics.gate import temperature_schedule
from dyexplainer.numerics.optim import SGD
from dyexplainer.numerics.tensor import GradTape, Tensor, backward
from dyexplainer.repositories.checkpoint_repo import CheckpointRepository
from dyexplainer.schemas.config import RunConfig
from dyexplainer.schemas.metrics import MetricsRecord
from dyexplainer.services.evaluation_service import bce_with_negatives, mrr

logger = get_logger(__name__)

# Independent random streams derived from the run seed
_STREAM_TRACKED = 1
_STREAM_EVAL = 2
_STREAM_BACKBONE = 3
_STREAM_GATES = 4
_STREAM_EXPLAIN = 5
_STREAM_ANCHORS = 6


@dataclass
class LiveUpdateResult:
    """
    A trained pipeline after the last processed snapshot.

    `previous_state` and `previous_buffer` are the state and buffer before the
    last snapshot was encoded, so that snapshot can be re-encoded under a mask.
    `revealed` holds the snapshots whose edges were used as training labels.
    """

    model: DyExplainerModel
    state: NodeState
    previous_state: NodeState
    buffer: EmbeddingBuffer
    previous_buffer: EmbeddingBuffer
    tracked_nodes: NDArray[np.int64]
    history: AttentionHistory
    records: list[MetricsRecord] = field(default_factory=list)
    revealed: frozenset[int] = frozenset()

    @property
    def last_snapshot(self) -> int:
        return self.buffer.indices[-1]

    def holdout(self, graph: DynamicGraph) -> int:
        """
        First snapshot after the buffer whose labels training never saw.

        Raises:
            EmptyEvaluationSetError: If every later snapshot was revealed
        """
        for index in range(self.last_snapshot + 1, graph.num_snapshots):
            if index not in self.revealed:
                return index
        raise EmptyEvaluationSetError(
            f"Every snapshot after {self.last_snapshot} was used for training; "
            "train with fewer train.num_steps to hold one out"
        )

    def position(self, graph: DynamicGraph, index: int) -> tuple[NodeState, EmbeddingBuffer]:
        """
        State and buffer just before snapshot `index` is encoded. Snapshots
        between the buffer and `index` are encoded with the frozen backbone.
        """
        last = self.last_snapshot
        if index < last:
            raise ValueError(f"Snapshot {index} precedes the buffered snapshot {last}")
        if index == last:
            return self.previous_state, self.previous_buffer.copy()
        state, buffer = self.state, self.buffer.copy()
        for t in range(last + 1, index):
            state, hidden = self.model.backbone.encode(state, graph[t])
            buffer.push(graph[t], hidden.data)
        return state, buffer


class LiveUpdateTrainer:
    """Runs the live-update protocol for one model and configuration."""

    def __init__(
        self,
        model: DyExplainerModel,
        config: RunConfig,
        threads: int = 1,
        progress: bool = True,
    ):
        self.model = model
        self.config = config
        self.threads = threads
        self.progress = progress
        self.seed = config.train.seed if config.train.seed is not None else config.seed
        # Snapshots whose edges have been used as training labels
        self.revealed: set[int] = set()

    def _rng(self, stream: int, *keys: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, stream, *keys])

    # ==================== Phases ====================

    def evaluate_next(
        self,
        state: NodeState,
        buffer: EmbeddingBuffer,
        snapshot: Snapshot,
        future: Snapshot,
    ) -> float | None:
        """MRR on the edges of `future`; None when it has no edges."""
        if future.num_edges == 0:
            logger.warning(f"Snapshot {future.index} has no edges; MRR is absent")
            return None
        result = self.model.forward(state, buffer, snapshot)
        return mrr(
            result.embeddings,
            future,
            self.model.head,
            self.config.train.mrr_negatives,
            self._rng(_STREAM_EVAL, snapshot.index),
            self.threads,
        )

    def train_backbone(
        self,
        state: NodeState,
        buffer: EmbeddingBuffer,
        snapshot: Snapshot,
        future: Snapshot,
    ) -> tuple[int, float]:
        """
        Optimize backbone and head on the next snapshot's edges with early
        stopping on the training loss. Returns (epochs run, last loss).
        """
        train = self.config.train
        if future.num_edges == 0:
            logger.warning(f"No labels for snapshot {snapshot.index}; backbone not trained")
            return 0, math.nan

        model = self.model
        model.freeze(model.backbone, model.head)
        params = {**model.backbone.parameters(), **model.head.parameters()}
        optimizer = SGD(params, lr=train.backbone_lr, momentum=train.momentum)
        rng = self._rng(_STREAM_BACKBONE, snapshot.index)

        best = math.inf
        stale = 0
        epochs = 0
        last = math.nan
        for _ in range(train.max_backbone_epochs):
            with GradTape() as tape:
                tape.watch(params)
                result = model.forward(state, buffer, snapshot)
                loss = bce_with_negatives(
                    result.embeddings, future, model.head, rng, train.negative_samples_per_positive
                )
            optimizer.step(backward(tape, loss))
            epochs += 1
            last = loss.item()
            if last < best - train.early_stop_min_delta:
                best = last
                stale = 0
            else:
                stale += 1
                if stale >= train.early_stop_patience:
                    break
        logger.debug(f"Backbone at snapshot {snapshot.index}: {epochs} epochs, loss {last:.4f}")
        return epochs, last

    def _consistency(self, att: StructuralAttention, snapshot: Snapshot, epoch: int) -> Tensor:
        budget = self.config.regularizers
        anchors = sample_anchors(
            snapshot,
            self._rng(_STREAM_ANCHORS, snapshot.index, epoch),
            budget.anchors,
            budget.negatives,
        )
        if len(anchors) == 0:
            logger.warning(f"Snapshot {snapshot.index} has no edges; consistency loss is 0")
            return Tensor(0.0)
        return consistency_loss(att, anchors, budget.temperature)

    def _continuity(
        self,
        temporal: TemporalAttention,
        buffer: EmbeddingBuffer,
        history: AttentionHistory,
        tracked: NDArray[np.int64],
    ) -> Tensor:
        window = self.config.explainer.temporal_window
        positives: dict[int, NDArray[np.float64]] = {}
        if len(buffer) >= 2 and (window is None or window >= 2):
            nearby = buffer.indices[-2]
            for node in tracked.tolist():
                matrix = history.get(nearby, node)
                if matrix is not None:
                    positives[node] = matrix
        return continuity_loss(
            temporal,
            positives,
            history,
            tracked.tolist(),
            set(buffer.indices),
            self.config.regularizers.temperature,
        )

    def train_explainer(
        self,
        buffer: EmbeddingBuffer,
        snapshot: Snapshot,
        future: Snapshot,
        history: AttentionHistory,
        tracked: NDArray[np.int64],
    ) -> tuple[float, float, float] | None:
        """
        Fine-tune attention modules and head for E epochs on the full objective
        with annealed gate temperature. Returns the last (ce, cons, cont).
        """
        train = self.config.train
        explainer_config = self.config.explainer
        epochs = train.explainer_epochs
        if epochs == 0 or future.num_edges == 0:
            return None

        model = self.model
        model.freeze(model.explainer, model.head)
        params = {**model.explainer.parameters(), **model.head.parameters()}
        optimizer = SGD(params, lr=train.explainer_lr, momentum=train.momentum)

        losses = (math.nan, 0.0, 0.0)
        schedule = temperature_schedule(
            epochs, explainer_config.tau_start, explainer_config.tau_end
        )
        for epoch, tau in enumerate(schedule):
            with GradTape() as tape:
                tape.watch(params)
                explanation = model.explain(
                    buffer, "sample", self._rng(_STREAM_GATES, snapshot.index, epoch), tau
                )
                l_ce = bce_with_negatives(
                    explanation.embeddings,
                    future,
                    model.head,
                    self._rng(_STREAM_EXPLAIN, snapshot.index, epoch),
                    train.negative_samples_per_positive,
                )
                l_cons = (
                    self._consistency(explanation.latest, snapshot, epoch)
                    if train.alpha > 0
                    else Tensor(0.0)
                )
                l_cont = (
                    self._continuity(explanation.temporal, buffer, history, tracked)
                    if train.beta > 0
                    else Tensor(0.0)
                )
                loss = total_loss(l_ce, l_cons, l_cont, train.alpha, train.beta)
            optimizer.step(backward(tape, loss))
            losses = (l_ce.item(), l_cons.item(), l_cont.item())
        return losses

    def archive(
        self,
        buffer: EmbeddingBuffer,
        history: AttentionHistory,
        tracked: NDArray[np.int64],
    ) -> None:
        """Store the deterministic temporal attention of the tracked nodes."""
        temporal = self.model.explain(buffer).temporal
        for node in tracked.tolist():
            history.put(temporal.snapshot, node, temporal.matrix(node))

    # ==================== Loop ====================

    def run(self, graph: DynamicGraph) -> LiveUpdateResult:
        """
        Process snapshots 0..T-2 in stream order (fewer with train.num_steps).

        Raises:
            BucketingError: If the graph has fewer than two snapshots
        """
        if graph.num_snapshots < 2:
            raise BucketingError("Live update needs at least two snapshots")
        config = self.config
        train = config.train
        steps = graph.num_snapshots - 1
        if train.num_steps is not None:
            steps = min(steps, train.num_steps)

        model = self.model
        state = model.backbone.initial_state(graph.num_nodes)
        previous_state = state
        buffer = EmbeddingBuffer(train.buffer_size)
        previous_buffer = buffer.copy()
        history = AttentionHistory(config.history_capacity, train.buffer_size)
        tracked = np.sort(
            self._rng(_STREAM_TRACKED).choice(
                graph.num_nodes,
                size=min(config.regularizers.anchors, graph.num_nodes),
                replace=False,
            )
        )

        records: list[MetricsRecord] = []
        for t in tqdm(
            range(steps),
            desc="live update",
            unit="snapshot",
            disable=None if self.progress else True,
        ):
            snapshot, future = graph[t], graph[t + 1]
            started = time.perf_counter()

            before = future.index not in self.revealed
            score = self.evaluate_next(state, buffer, snapshot, future)
            self.revealed.add(future.index)

            epochs, ce = self.train_backbone(state, buffer, snapshot, future)

            previous_state, previous_buffer = state, buffer.copy()
            state, hidden = model.backbone.encode(state, snapshot)
            buffer.push(snapshot, hidden.data)

            losses = self.train_explainer(buffer, snapshot, future, history, tracked)
            self.archive(buffer, history, tracked)

            l_ce, l_cons, l_cont = losses if losses is not None else (ce, 0.0, 0.0)
            reported_ce = None if math.isnan(l_ce) else l_ce
            record = MetricsRecord(
                snapshot=future.index,
                trained_on=snapshot.index,
                mrr=score,
                ce=reported_ce,
                cons=l_cons,
                cont=l_cont,
                backbone_epochs=epochs,
                evaluated_before_training=before,
                wall_time=time.perf_counter() - started,
            )
            records.append(record)
            logger.info(
                f"Snapshot {future.index}: mrr={score if score is None else round(score, 4)} "
                f"ce={reported_ce} epochs={epochs}"
            )

        model.freeze(*model.modules)
        return LiveUpdateResult(
            model=model,
            state=state,
            previous_state=previous_state,
            buffer=buffer,
            previous_buffer=previous_buffer,
            tracked_nodes=tracked,
            history=history,
            records=records,
            revealed=frozenset(self.revealed),
        )


def live_update(
    graph: DynamicGraph,
    config: RunConfig,
    threads: int = 1,
    progress: bool = True,
) -> LiveUpdateResult:
    """Build a model for `graph` and train it with the live-update loop."""
    model = DyExplainerModel(config, graph.feature_dim)
    return LiveUpdateTrainer(model, config, threads, progress).run(graph)


# ==================== Checkpoints ====================


def _pack_buffer(prefix: str, buffer: EmbeddingBuffer) -> dict[str, NDArray[np.float64]]:
    return {f"{prefix}.{k}": entry.embedding for k, entry in enumerate(buffer)}


def _pack_state(prefix: str, state: NodeState) -> dict[str, NDArray[np.float64]]:
    return {f"{prefix}.layer{k}": layer for k, layer in enumerate(state.layers)}


def save_checkpoint(result: LiveUpdateResult, config: RunConfig, path: str) -> str:
    """Archive all weights, both node states and both buffers."""
    tensors = result.model.state_dict()
    tensors.update(_pack_state("state", result.state))
    tensors.update(_pack_state("previous_state", result.previous_state))
    tensors.update(_pack_buffer("buffer", result.buffer))
    tensors.update(_pack_buffer("previous_buffer", result.previous_buffer))
    metadata = {
        "config": config.model_dump(mode="json"),
        "input_dim": result.model.backbone.input_dim,
        "buffer_indices": result.buffer.indices,
        "previous_buffer_indices": result.previous_buffer.indices,
        "tracked_nodes": result.tracked_nodes.tolist(),
        "revealed": sorted(result.revealed),
    }
    return str(CheckpointRepository(path).save(tensors, metadata))


def load_checkpoint(path: str, graph: DynamicGraph, config: RunConfig) -> LiveUpdateResult:
    """
    Rebuild a trained pipeline; buffered snapshots are taken from `graph`.

    Raises:
        CheckpointNotFoundError: If `path` does not exist
        CheckpointFormatError: If the archive does not fit `graph` or `config`
    """
    tensors, metadata = CheckpointRepository(path).load()
    model = DyExplainerModel(config, int(metadata["input_dim"]))
    model.load_state_dict(tensors)

    def unpack_state(prefix: str) -> NodeState:
        layers = tuple(
            tensors[f"{prefix}.layer{k}"] for k in range(config.backbone.num_layers)
        )
        return NodeState(layers)

    def unpack_buffer(prefix: str, indices: list[int]) -> EmbeddingBuffer:
        buffer = EmbeddingBuffer(config.train.buffer_size)
        for k, index in enumerate(indices):
            if index >= graph.num_snapshots:
                raise CheckpointFormatError(
                    f"Checkpoint buffers snapshot {index}, graph has {graph.num_snapshots}"
                )
            buffer.push(graph[index], tensors[f"{prefix}.{k}"])
        return buffer

    try:
        state = unpack_state("state")
        previous_state = unpack_state("previous_state")
        buffer = unpack_buffer("buffer", metadata["buffer_indices"])
        previous_buffer = unpack_buffer("previous_buffer", metadata["previous_buffer_indices"])
        revealed = frozenset(int(index) for index in metadata["revealed"])
    except KeyError as exc:
        raise CheckpointFormatError(f"Checkpoint lacks entry {exc}") from exc

    if state.num_nodes != graph.num_nodes:
        raise CheckpointFormatError(
            f"Checkpoint has {state.num_nodes} nodes, graph has {graph.num_nodes}"
        )
    return LiveUpdateResult(
        model=model,
        state=state,
        previous_state=previous_state,
        buffer=buffer,
        previous_buffer=previous_buffer,
        tracked_nodes=np.asarray(metadata["tracked_nodes"], dtype=np.int64),
        history=AttentionHistory(config.history_capacity, config.train.buffer_size),
        revealed=revealed,
    )
