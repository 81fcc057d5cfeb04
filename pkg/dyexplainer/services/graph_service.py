"""
Graph Service

Turns timestamped edge streams into a dynamic graph of snapshots.
"""

from collections.abc import Sequence
from typing import Literal

import numpy as np

from dyexplainer.core.exceptions import BucketingError, EmptyEdgeStreamError
from dyexplainer.core.logging import get_logger
from dyexplainer.models.graph import DynamicGraph, NodeIndex, Snapshot, TimestampedEdge
from dyexplainer.repositories.edge_stream_repo import EdgeStreamRepository
from dyexplainer.schemas.config import BucketPolicy, DataConfig

logger = get_logger(__name__)

FeatureMode = Literal["degree", "identity"]


def _bucket_ids(times: np.ndarray, policy: BucketPolicy) -> tuple[np.ndarray, int, np.ndarray]:
    """Bucket id per edge, bucket count, and bucket boundaries."""
    t_min, t_max = float(times.min()), float(times.max())
    if policy.count is not None:
        count = policy.count
        distinct = np.unique(times).size
        if count > distinct:
            raise BucketingError(
                f"Cannot split {distinct} distinct timestamps into {count} snapshots"
            )
        if count == 1:
            return np.zeros(times.shape[0], dtype=np.int64), 1, np.array([t_min, t_max])
        width = (t_max - t_min) / count
        ids = np.floor((times - t_min) / (t_max - t_min) * count).astype(np.int64)
        ids = np.clip(ids, 0, count - 1)
        bounds = t_min + width * np.arange(count + 1)
        bounds[-1] = t_max
        return ids, count, bounds

    assert policy.duration is not None
    ids = np.floor((times - t_min) / policy.duration).astype(np.int64)
    count = int(ids.max()) + 1
    bounds = t_min + policy.duration * np.arange(count + 1)
    return ids, count, bounds


def node_features(
    num_nodes: int,
    first_src: np.ndarray,
    first_dst: np.ndarray,
    mode: FeatureMode = "degree",
    dim: int = 16,
) -> np.ndarray:
    """
    Static node features shared by all snapshots.

    "degree" one-hot encodes each node's symmetrized degree in the first
    snapshot, saturating at `dim - 1`; "identity" is the N x N identity.
    """
    if mode == "identity":
        return np.eye(num_nodes)
    neighbours: list[set[int]] = [set() for _ in range(num_nodes)]
    for s, d in zip(first_src.tolist(), first_dst.tolist(), strict=True):
        neighbours[s].add(d)
        neighbours[d].add(s)
    degree = np.array([len(n) for n in neighbours], dtype=np.int64)
    features = np.zeros((num_nodes, dim))
    features[np.arange(num_nodes), np.minimum(degree, dim - 1)] = 1.0
    return features


def bucket_snapshots(
    edges: Sequence[TimestampedEdge],
    policy: BucketPolicy,
    feature_mode: FeatureMode = "degree",
    feature_dim: int = 16,
) -> DynamicGraph:
    """
    Partition an edge stream into consecutive snapshots.

    Duplicate (src, dst) pairs inside one bucket collapse to one edge with the
    largest weight (missing weights count as 1.0).

    Raises:
        EmptyEdgeStreamError: If `edges` is empty
        BucketingError: If the policy cannot produce the requested snapshots
    """
    if not edges:
        raise EmptyEdgeStreamError()

    raw_ids = sorted({e.src for e in edges} | {e.dst for e in edges})
    node_index = NodeIndex(tuple(raw_ids))
    num_nodes = len(node_index)

    times = np.array([e.timestamp for e in edges], dtype=np.float64)
    bucket, count, bounds = _bucket_ids(times, policy)

    per_bucket: list[dict[tuple[int, int], float]] = [{} for _ in range(count)]
    events = np.zeros(count, dtype=np.int64)
    for edge, b in zip(edges, bucket.tolist(), strict=True):
        pair = (node_index.to_dense(edge.src), node_index.to_dense(edge.dst))
        weight = 1.0 if edge.weight is None else float(edge.weight)
        current = per_bucket[b].get(pair)
        per_bucket[b][pair] = weight if current is None else max(current, weight)
        events[b] += 1

    edge_arrays = []
    for pairs in per_bucket:
        ordered = sorted(pairs)
        src = np.array([p[0] for p in ordered], dtype=np.int64)
        dst = np.array([p[1] for p in ordered], dtype=np.int64)
        weights = np.array([pairs[p] for p in ordered], dtype=np.float64)
        edge_arrays.append((src, dst, weights))

    features = node_features(
        num_nodes, edge_arrays[0][0], edge_arrays[0][1], feature_mode, feature_dim
    )
    features.setflags(write=False)

    snapshots = tuple(
        Snapshot(
            index=t,
            num_nodes=num_nodes,
            src=src,
            dst=dst,
            weights=weights,
            features=features,
            t_start=float(bounds[t]),
            t_end=float(bounds[t + 1]),
            num_events=int(events[t]),
        )
        for t, (src, dst, weights) in enumerate(edge_arrays)
    )
    empty = sum(1 for s in snapshots if s.num_edges == 0)
    if empty:
        logger.warning(f"{empty} of {count} snapshots are empty")
    logger.info(f"Bucketed {len(edges)} edges into {count} snapshots over {num_nodes} nodes")
    return DynamicGraph(
        snapshots=snapshots, node_index=node_index, feature_dim=int(features.shape[1])
    )


class GraphService:
    """Ingests the configured edge stream into a dynamic graph."""

    def __init__(self, config: DataConfig):
        self.config = config

    def edge_repo(self) -> EdgeStreamRepository:
        """
        Repository of the configured edge file.

        Raises:
            BucketingError: If no data path is configured
        """
        if self.config.path is None:
            raise BucketingError("data.path is not set")
        return EdgeStreamRepository(self.config.path)

    def load(self) -> DynamicGraph:
        """Read, bucket and name the configured edge stream."""
        config = self.config
        edges = self.edge_repo().load(config.columns, config.delimiter)
        graph = bucket_snapshots(edges, config.bucketing, config.feature_mode, config.feature_dim)
        graph.metadata["name"] = config.name
        graph.metadata["path"] = config.path
        return graph
