"""
Pytest Configuration and Fixtures

Toy snapshots and graphs, small run configurations and seeded generators.
"""

from collections.abc import Sequence
from pathlib import Path

import numpy as np
import pytest

from dyexplainer.models.graph import DynamicGraph, Snapshot, TimestampedEdge
from dyexplainer.schemas.config import BucketPolicy, RunConfig
from dyexplainer.services.graph_service import bucket_snapshots, node_features


def make_snapshot(
    edges: Sequence[tuple[int, int]],
    num_nodes: int,
    index: int = 0,
    feature_dim: int = 4,
) -> Snapshot:
    """Snapshot over dense ids with degree features."""
    ordered = sorted(set(edges))
    src = np.array([s for s, _ in ordered], dtype=np.int64)
    dst = np.array([d for _, d in ordered], dtype=np.int64)
    return Snapshot(
        index=index,
        num_nodes=num_nodes,
        src=src,
        dst=dst,
        weights=np.ones(len(ordered)),
        features=node_features(num_nodes, src, dst, "degree", feature_dim),
    )


def small_config(**sections: dict) -> RunConfig:
    """A run configuration with tiny dimensions; `sections` update its defaults."""
    payload: dict = {
        "seed": 7,
        "data": {"feature_dim": 4, "bucketing": {"count": 4}},
        "backbone": {"num_layers": 1, "hidden_dim": 4},
        "explainer": {"structural_dim": 3, "temporal_dim": 3},
        "regularizers": {"anchors": 4, "negatives": 2},
        "train": {
            "max_backbone_epochs": 3,
            "explainer_epochs": 2,
            "buffer_size": 3,
            "mrr_negatives": 5,
            "link_hidden_dim": 4,
        },
    }
    for name, values in sections.items():
        if isinstance(payload.get(name), dict):
            payload[name] = {**payload[name], **values}
        else:
            payload[name] = values
    return RunConfig.model_validate(payload)


TOY_EDGES = [
    # (src, dst, time)
    (0, 1, 0), (1, 2, 0), (2, 3, 0), (3, 0, 0), (4, 5, 0), (1, 4, 0),
    (0, 2, 1), (1, 3, 1), (2, 4, 1), (3, 5, 1), (5, 0, 1), (4, 1, 1),
    (0, 1, 2), (2, 3, 2), (4, 5, 2), (5, 1, 2), (3, 4, 2), (1, 0, 2),
    (0, 3, 3), (1, 5, 3), (2, 0, 3), (4, 2, 3), (5, 3, 3), (3, 1, 3),
]  # fmt: skip


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def toy_edges() -> list[TimestampedEdge]:
    return [TimestampedEdge(src=s, dst=d, timestamp=float(t)) for s, d, t in TOY_EDGES]


@pytest.fixture
def toy_graph(toy_edges: list[TimestampedEdge]) -> DynamicGraph:
    """Six nodes over four snapshots."""
    return bucket_snapshots(toy_edges, BucketPolicy(duration=1.0), "degree", 4)


@pytest.fixture
def config() -> RunConfig:
    return small_config()


@pytest.fixture
def edge_file(tmp_path: Path) -> Path:
    path = tmp_path / "edges.txt"
    lines = ["# src dst time"] + [f"{s} {d} {t}" for s, d, t in TOY_EDGES]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
