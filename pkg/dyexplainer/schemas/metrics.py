"""
Run Record Schemas

Per-snapshot metrics, run summaries, sweep rows and the run manifest.
"""

from typing import Any

from pydantic import BaseModel, Field


class MetricsRecord(BaseModel):
    """
    One live-update step: MRR on snapshot `snapshot` (absent when it has no
    edges), computed before training on snapshot `trained_on`.
    """

    snapshot: int
    trained_on: int
    mrr: float | None = Field(None, ge=0, le=1)
    ce: float | None = None
    cons: float = 0.0
    cont: float = 0.0
    backbone_epochs: int = 0
    evaluated_before_training: bool = True
    wall_time: float = 0.0


class TimingRecord(BaseModel):
    snapshot: int
    wall_time: float


class RunSummary(BaseModel):
    """Headline report of a training run."""

    dataset: str | None = None
    headline_mrr: float | None = None
    evaluated_snapshots: int = 0
    headline_snapshots: list[int] = Field(default_factory=list)
    reference_mrr: float | None = None
    reference_std: float | None = None


class EvaluationReport(BaseModel):
    """MRR of a checkpoint on the snapshot after its buffer."""

    snapshot: int
    mrr: float = Field(ge=0, le=1)
    num_edges: int
    num_negatives: int


class SweepRow(BaseModel):
    """Fidelity of one top-k mask."""

    target_sparsity: float
    sparsity: float
    fidelity: float = Field(ge=0)
    kept_edges: int


class RecoveryRow(BaseModel):
    seed: int
    explanation_auc: float | None
    temporal_recovered: bool
    scored_snapshots: list[int]


class RecoveryReport(BaseModel):
    """Explanation-quality experiment on planted data over several seeds."""

    rows: list[RecoveryRow]
    mean_auc: float | None
    recovery_rate: float


class RunManifest(BaseModel):
    """Everything needed to reproduce a command invocation."""

    command: str
    seed: int
    config: dict[str, Any]
    versions: dict[str, str]
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: list[str] = Field(default_factory=list)
