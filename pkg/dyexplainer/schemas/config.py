"""
Run Configuration Schemas

Pydantic models for every section of a run configuration file. All sections
reject unknown keys.
"""

from typing import Literal

from pydantic import Field, model_validator

from dyexplainer.schemas.common import StrictModel
from dyexplainer.schemas.synthetic import PlantedSpec


class GateParams(StrictModel):
    """Binary-concrete gate parameters with stretch bounds."""

    tau: float = Field(1.0, gt=0)
    gamma: float = Field(-0.1, lt=0)
    xi: float = Field(1.1, gt=1)


class BucketPolicy(StrictModel):
    """Snapshot bucketing: either a fixed snapshot count or a fixed duration."""

    count: int | None = Field(None, ge=1)
    duration: float | None = Field(None, gt=0)

    @model_validator(mode="after")
    def check_exactly_one(self) -> "BucketPolicy":
        if (self.count is None) == (self.duration is None):
            raise ValueError("exactly one of 'count' or 'duration' must be set")
        return self


class DataConfig(StrictModel):
    """Where the edge stream lives and how it becomes snapshots."""

    path: str | None = None
    name: str | None = None
    columns: str = "src,dst,time"
    delimiter: Literal["auto", "comma", "whitespace"] = "auto"
    bucketing: BucketPolicy = Field(default_factory=lambda: BucketPolicy(count=10))
    feature_mode: Literal["degree", "identity"] = "degree"
    feature_dim: int = Field(16, gt=0)


class BackboneConfig(StrictModel):
    """Stacked message-passing backbone with GRU state updates."""

    num_layers: int = Field(2, ge=1, le=4)
    hidden_dim: int = Field(128, gt=0)
    aggregation: Literal["sum"] = "sum"
    skip_connections: bool = True
    row_normalize: bool = True


class ExplainerConfig(StrictModel):
    """Structural and temporal attention settings."""

    structural_dim: int = Field(16, gt=0)
    temporal_dim: int = Field(16, gt=0)
    leaky_slope: float = Field(0.2, ge=0)
    gate: GateParams = Field(default_factory=GateParams)
    tau_start: float = Field(1.0, gt=0)
    tau_end: float = Field(0.1, gt=0)
    temporal_window: int | None = Field(None, ge=1)
    structural_attention: bool = True
    temporal_attention: bool = True
    structural_softmax: bool = False


class RegularizerConfig(StrictModel):
    """Anchor budgets and history size for the contrastive terms."""

    anchors: int = Field(32, ge=1)
    negatives: int = Field(8, ge=1)
    history_capacity: int | None = Field(None, ge=1)
    temperature: float = Field(1.0, gt=0)


class TrainConfig(StrictModel):
    """Live-update training loop settings."""

    max_backbone_epochs: int = Field(100, ge=1)
    explainer_epochs: int = Field(4, ge=0)
    buffer_size: int = Field(5, ge=1)
    backbone_lr: float = Field(0.01, gt=0)
    explainer_lr: float = Field(0.01, gt=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    alpha: float = Field(0.1, ge=0, le=1)
    beta: float = Field(0.1, ge=0, le=1)
    negative_samples_per_positive: int = Field(1, ge=1)
    mrr_negatives: int = Field(100, ge=1)
    early_stop_patience: int = Field(5, ge=1)
    early_stop_min_delta: float = Field(0.0, ge=0)
    link_hidden_dim: int = Field(16, gt=0)
    num_steps: int | None = Field(None, ge=1)
    seed: int | None = Field(None, ge=0)

    @model_validator(mode="after")
    def check_tradeoff(self) -> "TrainConfig":
        if self.alpha + self.beta > 1:
            raise ValueError(f"alpha + beta must not exceed 1 (got {self.alpha + self.beta})")
        return self


class EvaluationConfig(StrictModel):
    """Explanation scoring and export settings."""

    sparsity_grid: list[float] = Field(
        default_factory=lambda: [round(0.1 * k, 1) for k in range(1, 10)]
    )
    eval_negatives: int = Field(1, ge=0)
    track_edges: list[tuple[int, int]] | None = None
    explain_nodes: list[int] | None = None
    importance_csv: str | None = None

    @model_validator(mode="after")
    def check_grid(self) -> "EvaluationConfig":
        for value in self.sparsity_grid:
            if not 0.0 <= value < 1.0:
                raise ValueError(f"sparsity grid values must lie in [0, 1), got {value}")
        return self


class RunConfig(StrictModel):
    """Top-level configuration for one CLI run."""

    seed: int = Field(0, ge=0)
    threads: int | None = Field(None, ge=1)
    output_dir: str | None = None
    data: DataConfig = Field(default_factory=DataConfig)
    backbone: BackboneConfig = Field(default_factory=BackboneConfig)
    explainer: ExplainerConfig = Field(default_factory=ExplainerConfig)
    regularizers: RegularizerConfig = Field(default_factory=RegularizerConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    synthetic: PlantedSpec = Field(default_factory=PlantedSpec)

    @model_validator(mode="after")
    def propagate_seed(self) -> "RunConfig":
        if self.train.seed is None:
            self.train.seed = self.seed
        if self.synthetic.seed is None:
            self.synthetic.seed = self.seed
        return self

    @property
    def history_capacity(self) -> int:
        return self.regularizers.history_capacity or 4 * self.train.buffer_size
