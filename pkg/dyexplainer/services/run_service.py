"""
Run Service

Orchestrates the command-line pipeline: each command loads what it needs,
calls the domain services and writes its artifacts plus a manifest into the
output directory.
"""

import hashlib
from importlib import metadata
from pathlib import Path

import numpy as np

from dyexplainer import __version__
from dyexplainer.core.exceptions import InfeasibleSpecError
from dyexplainer.core.logging import get_logger
from dyexplainer.models.graph import DynamicGraph, Snapshot
from dyexplainer.repositories.checkpoint_repo import CheckpointRepository
from dyexplainer.repositories.export_repo import ExportRepository, read_importance_csv
from dyexplainer.schemas.config import BucketPolicy, RunConfig
from dyexplainer.schemas.metrics import (
    EvaluationReport,
    RecoveryReport,
    RunManifest,
    RunSummary,
    SweepRow,
    TimingRecord,
)
from dyexplainer.schemas.synthetic import GroundTruth
from dyexplainer.services.evaluation_service import mrr, summarize_run
from dyexplainer.services.explanation_service import (
    ExplanationContext,
    evaluation_edges,
    fidelity_sweep,
    importance_attention,
)
from dyexplainer.services.graph_service import GraphService
from dyexplainer.services.synthetic_service import generate_planted, recovery_experiment
from dyexplainer.services.training_service import (
    LiveUpdateResult,
    live_update,
    load_checkpoint,
    save_checkpoint,
)

logger = get_logger(__name__)

CHECKPOINT_NAME = "checkpoint.dyx"
MANIFEST_NAME = "manifest.json"

_STREAM_EVALUATE = 7
_STREAM_SWEEP = 8


def file_digest(path: str | Path) -> str:
    """SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def component_versions() -> dict[str, str]:
    versions = {"dyexplainer": __version__}
    for package in ("numpy", "scipy", "pydantic"):
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


class RunService:
    """One command invocation against one configuration and output directory."""

    def __init__(
        self,
        config: RunConfig,
        output_dir: str | Path,
        threads: int = 1,
        progress: bool = True,
    ):
        self.config = config
        self.output_dir = Path(output_dir)
        self.threads = threads
        self.progress = progress
        self.exports = ExportRepository(self.output_dir)
        self.inputs: dict[str, str] = {}

    # ==================== Helpers ====================

    def _record_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def _load_graph(self, config: RunConfig | None = None) -> DynamicGraph:
        config = config or self.config
        graph = GraphService(config.data).load()
        if config.data.path is not None:
            self._record_input(config.data.path)
        return graph

    def _rng(self, stream: int, *keys: int) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, stream, *keys])

    def checkpoint_path(self, checkpoint: str | Path | None = None) -> Path:
        return Path(checkpoint) if checkpoint is not None else self.output_dir / CHECKPOINT_NAME

    def _restore(self, checkpoint: str | Path | None) -> tuple[DynamicGraph, LiveUpdateResult]:
        """
        Rebuild the trained pipeline and re-ingest the data it was trained on.

        Raises:
            CheckpointNotFoundError: If the checkpoint does not exist
        """
        path = self.checkpoint_path(checkpoint)
        _, meta = CheckpointRepository(path).load()
        trained = RunConfig.model_validate(meta["config"])
        graph = self._load_graph(trained)
        result = load_checkpoint(str(path), graph, trained)
        self._record_input(path)
        return graph, result

    def _holdout(
        self, graph: DynamicGraph, result: LiveUpdateResult
    ) -> tuple[ExplanationContext, Snapshot]:
        """
        The first snapshot whose labels training never saw, and a context
        positioned on the snapshot before it.

        Raises:
            EmptyEvaluationSetError: If no such snapshot remains
        """
        target = result.holdout(graph)
        context = ExplanationContext.from_result(result, graph, target - 1)
        return context, graph[target]

    def write_manifest(self, command: str) -> RunManifest:
        """Record config, seed, versions, input digests and outputs."""
        manifest_path = self.exports.path(MANIFEST_NAME)
        outputs = sorted(
            {str(Path(p).relative_to(self.output_dir)) for p in self.exports.written}
            | {MANIFEST_NAME}
        )
        manifest = RunManifest(
            command=command,
            seed=self.config.seed,
            config=self.config.model_dump(mode="json"),
            versions=component_versions(),
            inputs=dict(sorted(self.inputs.items())),
            outputs=outputs,
        )
        self.exports.write_json(MANIFEST_NAME, manifest)
        logger.info(f"Manifest written to {manifest_path}")
        return manifest

    # ==================== Commands ====================

    def ingest(self) -> dict[str, object]:
        """Bucket the configured edge stream and write its snapshot summary."""
        graph = self._load_graph()
        summary = {"name": self.config.data.name, **graph.summary()}
        self.exports.write_json("snapshots.json", summary)
        self.write_manifest("ingest")
        return summary

    def synth(self) -> GroundTruth:
        """
        Write a planted edge stream, its ground truth and a config to train on it.

        Raises:
            InfeasibleSpecError: If the planted lag does not fit in the buffer
        """
        spec = self.config.synthetic
        if spec.lag >= self.config.train.buffer_size:
            raise InfeasibleSpecError(
                f"lag {spec.lag} needs a buffer larger than {self.config.train.buffer_size}"
            )
        graph, truth, edges = generate_planted(
            spec, self.config.data.feature_mode, self.config.data.feature_dim
        )
        edges_path = self.exports.write_edges("planted_edges.txt", edges)
        self.exports.write_json("ground_truth.json", truth)
        self.exports.write_json("snapshots.json", {"name": "planted", **graph.summary()})

        data = self.config.data.model_copy(
            update={
                "path": str(edges_path),
                "name": "planted",
                "columns": "src,dst,time",
                "delimiter": "whitespace",
                "bucketing": BucketPolicy(duration=1.0),
            }
        )
        train_config = self.config.model_copy(update={"data": data})
        self.exports.write_json("planted_config.json", train_config.model_dump(mode="json"))
        self.write_manifest("synth")
        return truth

    def train(self) -> RunSummary:
        """Live-update training; writes the checkpoint, metrics and timings."""
        graph = self._load_graph()
        result = live_update(graph, self.config, threads=self.threads, progress=self.progress)

        save_checkpoint(result, self.config, str(self.output_dir / CHECKPOINT_NAME))
        self.exports.written.append(str(self.output_dir / CHECKPOINT_NAME))
        self.exports.write_jsonl("metrics.jsonl", result.records, exclude={"wall_time"})
        self.exports.write_jsonl(
            "timings.jsonl",
            (TimingRecord(snapshot=r.snapshot, wall_time=r.wall_time) for r in result.records),
        )
        summary = summarize_run(result.records, self.config.data.name)
        self.exports.write_json("summary.json", summary)
        self.write_manifest("train")

        if summary.reference_mrr is not None:
            logger.info(
                f"Headline MRR {summary.headline_mrr} (published {summary.reference_mrr}"
                + (f" +/- {summary.reference_std})" if summary.reference_std else ")")
            )
        return summary

    def evaluate(self, checkpoint: str | Path | None = None) -> EvaluationReport:
        """MRR of a checkpoint on the first snapshot it was not trained on."""
        graph, result = self._restore(checkpoint)
        context, future = self._holdout(graph, result)
        forward = result.model.forward(context.state, context.buffer, context.snapshot)
        score = mrr(
            forward.embeddings,
            future,
            result.model.head,
            self.config.train.mrr_negatives,
            self._rng(_STREAM_EVALUATE, future.index),
            self.threads,
        )
        report = EvaluationReport(
            snapshot=future.index,
            mrr=score,
            num_edges=future.num_edges,
            num_negatives=self.config.train.mrr_negatives,
        )
        self.exports.write_json("evaluation.json", report)
        self.write_manifest("eval")
        return report

    def explain(self, checkpoint: str | Path | None = None) -> list[Path]:
        """Structural and temporal attention CSVs of the checkpoint's buffer."""
        graph, result = self._restore(checkpoint)
        evaluation = self.config.evaluation
        explanation = result.model.explain(result.buffer)

        structural = self.exports.write_structural(
            "structural_attention.csv",
            explanation.structural,
            graph.node_index,
            track=evaluation.track_edges,
        )
        if evaluation.explain_nodes is None:
            nodes = result.tracked_nodes.tolist()
        else:
            nodes = []
            for raw in evaluation.explain_nodes:
                if raw in graph.node_index:
                    nodes.append(graph.node_index.to_dense(raw))
                else:
                    logger.warning(f"Node {raw} does not occur in the data; not exported")
        temporal = self.exports.write_temporal(
            "temporal_attention.csv", explanation.temporal, graph.node_index, nodes
        )
        self.write_manifest("explain")
        return [structural, temporal]

    def sweep(self, checkpoint: str | Path | None = None) -> list[SweepRow]:
        """Fidelity against sparsity, predicting the first snapshot training never saw."""
        graph, result = self._restore(checkpoint)
        evaluation = self.config.evaluation
        context, future = self._holdout(graph, result)
        edges = evaluation_edges(
            future,
            self._rng(_STREAM_SWEEP, future.index),
            evaluation.eval_negatives,
        )

        attention = None
        if evaluation.importance_csv is not None:
            scores = read_importance_csv(evaluation.importance_csv, graph.node_index)
            self._record_input(evaluation.importance_csv)
            snapshot_scores = scores.get(context.snapshot.index, {})
            attention = importance_attention(context.snapshot, snapshot_scores)

        rows = fidelity_sweep(
            context, evaluation.sparsity_grid, edges, attention, threads=self.threads
        )
        self.exports.write_sweep("sweep.csv", [(row.sparsity, row.fidelity) for row in rows])
        self.exports.write_jsonl("sweep.jsonl", rows)
        self.write_manifest("sweep")
        return rows

    def recover(self, seeds: list[int]) -> RecoveryReport:
        """Planted-data explanation recovery over several seeds."""
        report = recovery_experiment(
            self.config.synthetic, self.config, seeds, threads=self.threads
        )
        self.exports.write_json("recovery.json", report)
        self.write_manifest("recover")
        return report
