"""
Tests for edge-stream parsing, snapshot bucketing and graph queries.
"""

from pathlib import Path

import numpy as np
import pytest

from dyexplainer.core.exceptions import (
    BucketingError,
    ConfigError,
    EdgeParseError,
    EmptyEdgeStreamError,
    NodeIndexError,
)
from dyexplainer.models.graph import TimestampedEdge
from dyexplainer.repositories.edge_stream_repo import (
    ColumnSpec,
    EdgeStreamRepository,
    parse_edge_lines,
)
from dyexplainer.schemas.config import BucketPolicy, DataConfig
from dyexplainer.services.graph_service import GraphService, bucket_snapshots


def test_parse_skips_comments_and_keeps_order():
    edges = parse_edge_lines(["# header", "", "3 1 10", "1 3 5"])

    assert [(e.src, e.dst, e.timestamp) for e in edges] == [(3, 1, 10.0), (1, 3, 5.0)]
    assert edges[0].weight is None


def test_parse_comma_separated_with_weight_column():
    edges = parse_edge_lines(["7,8,-2,1393"], columns="source,target,rating,time")

    assert edges[0].src == 7
    assert edges[0].weight == -2.0
    assert edges[0].timestamp == 1393.0


def test_parse_error_names_the_line():
    with pytest.raises(EdgeParseError) as exc_info:
        parse_edge_lines(["0 1 1", "0 x 2"])

    assert exc_info.value.line_number == 2


def test_parse_rejects_short_and_negative_rows():
    with pytest.raises(EdgeParseError):
        parse_edge_lines(["0 1"])
    with pytest.raises(EdgeParseError):
        parse_edge_lines(["-1 2 3"])


def test_parse_empty_stream():
    with pytest.raises(EmptyEdgeStreamError):
        parse_edge_lines(["# nothing here"])


def test_parse_skips_percent_headers():
    edges = parse_edge_lines(["% sym unweighted", "% 3 2", "0 1 4"])

    assert [(e.src, e.dst) for e in edges] == [(0, 1)]


def test_undecodable_line_is_a_parse_error(tmp_path: Path):
    path = tmp_path / "edges.txt"
    path.write_bytes(b"0 1 5\n1 \xff 7\n")

    with pytest.raises(EdgeParseError) as exc_info:
        EdgeStreamRepository(path).load()

    assert exc_info.value.line_number == 2


def test_missing_edge_file(tmp_path: Path):
    with pytest.raises(FileNotFoundError):
        EdgeStreamRepository(tmp_path / "absent.txt").load()


def test_column_spec_requires_core_columns():
    with pytest.raises(ConfigError):
        ColumnSpec("src,dst,weight")
    with pytest.raises(ConfigError):
        ColumnSpec("src,dst,time,color")


def test_written_stream_reads_back(tmp_path: Path):
    edges = [TimestampedEdge(2, 5, 0.0), TimestampedEdge(5, 2, 1.5)]
    repo = EdgeStreamRepository(tmp_path / "out" / "edges.txt")
    repo.save(edges)

    loaded = repo.load()

    assert [(e.src, e.dst, e.timestamp) for e in loaded] == [(2, 5, 0.0), (5, 2, 1.5)]


def test_bucket_by_count(toy_edges):
    graph = bucket_snapshots(toy_edges, BucketPolicy(count=2), "degree", 4)

    assert graph.num_snapshots == 2
    assert graph.num_nodes == 6
    assert [s.num_events for s in graph.snapshots] == [12, 12]


def test_bucket_by_duration_uses_time_ranges(toy_graph):
    assert toy_graph.num_snapshots == 4
    assert [s.num_edges for s in toy_graph.snapshots] == [6, 6, 6, 6]
    assert toy_graph[1].t_start == 1.0
    assert toy_graph[1].t_end == 2.0


def test_duplicate_edges_collapse_to_largest_weight():
    edges = [
        TimestampedEdge(0, 1, 0.0, weight=2.0),
        TimestampedEdge(0, 1, 0.5, weight=5.0),
        TimestampedEdge(1, 0, 0.7),
    ]
    graph = bucket_snapshots(edges, BucketPolicy(count=1))
    snapshot = graph[0]

    assert snapshot.edges == [(0, 1), (1, 0)]
    assert snapshot.weights.tolist() == [5.0, 1.0]
    assert snapshot.num_events == 3


def test_edges_are_sorted_and_unique(toy_graph):
    for snapshot in toy_graph.snapshots:
        assert snapshot.edges == sorted(set(snapshot.edges))


def test_too_many_buckets_for_distinct_timestamps(toy_edges):
    with pytest.raises(BucketingError):
        bucket_snapshots(toy_edges, BucketPolicy(count=5))


def test_empty_stream_cannot_be_bucketed():
    with pytest.raises(EmptyEdgeStreamError):
        bucket_snapshots([], BucketPolicy(count=1))


def test_raw_ids_map_to_dense_indices():
    edges = [TimestampedEdge(100, 7, 0.0), TimestampedEdge(7, 42, 1.0)]
    graph = bucket_snapshots(edges, BucketPolicy(count=2))

    assert graph.node_index.raw_ids == (7, 42, 100)
    assert graph[0].edges == [(2, 0)]
    assert graph.node_index.to_raw(1) == 42


def test_neighbors_are_symmetrized_and_sorted(toy_graph):
    snapshot = toy_graph[0]

    assert snapshot.neighbors(1) == [0, 2, 4]
    assert snapshot.neighbors(5) == [4]
    assert snapshot.out_neighbors[1] == frozenset({2, 4})


def test_neighbors_out_of_range(toy_graph):
    with pytest.raises(NodeIndexError):
        toy_graph[0].neighbors(6)


def test_symmetric_adjacency_is_binary(toy_graph):
    adjacency = toy_graph[2].symmetric_adjacency.toarray()

    assert np.array_equal(adjacency, adjacency.T)
    assert set(np.unique(adjacency).tolist()) <= {0.0, 1.0}
    # (0, 1) and (1, 0) both present still give a single 1
    assert adjacency[0, 1] == 1.0


def test_degree_features_are_one_hot(toy_graph):
    features = toy_graph[0].features

    assert features.shape == (6, 4)
    assert np.all(features.sum(axis=1) == 1.0)
    # node 1 has degree 3 in the first snapshot
    assert features[1, 3] == 1.0


def test_serialization_is_canonical(toy_edges):
    first = bucket_snapshots(toy_edges, BucketPolicy(count=4), "degree", 4)
    second = bucket_snapshots(list(toy_edges), BucketPolicy(count=4), "degree", 4)

    assert first.to_bytes() == second.to_bytes()


def test_graph_service_loads_the_configured_stream(edge_file):
    config = DataConfig(
        path=str(edge_file), name="toy", bucketing=BucketPolicy(count=4), feature_dim=4
    )
    graph = GraphService(config).load()

    assert graph.num_snapshots == 4
    assert graph.metadata["name"] == "toy"
    assert graph.summary()["num_nodes"] == 6


def test_graph_service_needs_a_path():
    with pytest.raises(BucketingError):
        GraphService(DataConfig()).load()
