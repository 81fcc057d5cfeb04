"""
Planted Dataset Schemas

Specification of a synthetic dynamic graph with known causal edges, and the
ground truth it emits.
"""

from pydantic import BaseModel, Field, model_validator

from dyexplainer.schemas.common import StrictModel


class PlantedSpec(StrictModel):
    """
    Planted dynamic-graph generator settings.

    A fixed motif of signal edges is switched on and off per snapshot; every
    active signal edge at t triggers its response link at t+1 and its lagged
    response link at t+lag+1, each with probability p_signal, so the links
    of t+1 depend on the signal edges of t and of t-lag. Noise edges are
    uniform pairs outside the motif and responses.
    """

    num_nodes: int = Field(20, ge=3)
    num_snapshots: int = Field(8, ge=2)
    noise_edges_per_snapshot: int = Field(6, ge=0)
    motif_size: int = Field(6, ge=1)
    activation_prob: float = Field(0.5, gt=0, le=1)
    p_signal: float = Field(1.0, gt=0.5, le=1)
    lag: int = Field(2, ge=1)
    seed: int | None = Field(None, ge=0)

    @model_validator(mode="after")
    def check_lag(self) -> "PlantedSpec":
        if self.lag + 1 >= self.num_snapshots:
            raise ValueError("lag must be at most num_snapshots - 2")
        return self


class GroundTruth(BaseModel):
    """Per-snapshot signal edges and the planted lag (raw node ids)."""

    lag: int
    signal_edges: list[list[tuple[int, int]]]
    response_edges: list[list[tuple[int, int]]]
    motif: list[tuple[int, int]]
    response_map: dict[str, tuple[int, int]]
    lagged_response_map: dict[str, tuple[int, int]]
