"""
Tests for the live-update training loop.
"""

import inspect

import numpy as np
import pytest

from dyexplainer.core.exceptions import BucketingError, EmptyEvaluationSetError
from dyexplainer.models.buffer import EmbeddingBuffer
from dyexplainer.models.graph import TimestampedEdge
from dyexplainer.modules.model import DyExplainerModel
from dyexplainer.numerics.tensor import Tensor
from dyexplainer.schemas.config import BucketPolicy
from dyexplainer.services import training_service
from dyexplainer.services.evaluation_service import mrr
from dyexplainer.services.graph_service import bucket_snapshots
from dyexplainer.services.training_service import LiveUpdateTrainer, live_update
from tests.conftest import small_config


def test_every_next_snapshot_is_evaluated_before_training(toy_graph, config):
    result = live_update(toy_graph, config, progress=False)

    assert [r.snapshot for r in result.records] == [1, 2, 3]
    assert [r.trained_on for r in result.records] == [0, 1, 2]
    assert all(r.evaluated_before_training for r in result.records)
    assert all(0.0 < r.mrr <= 1.0 for r in result.records)


def test_buffer_and_previous_buffer_after_run(toy_graph, config):
    result = live_update(toy_graph, config, progress=False)

    assert result.buffer.indices == [0, 1, 2]
    assert result.previous_buffer.indices == [0, 1]
    assert result.last_snapshot == 2
    assert result.state.num_nodes == 6


def test_backbone_epochs_are_bounded(toy_graph):
    config = small_config(train={"max_backbone_epochs": 2})
    result = live_update(toy_graph, config, progress=False)

    assert all(1 <= r.backbone_epochs <= 2 for r in result.records)


def test_num_steps_limits_the_stream(toy_graph):
    config = small_config(train={"num_steps": 1})
    result = live_update(toy_graph, config, progress=False)

    assert [r.snapshot for r in result.records] == [1]


def test_seeded_runs_are_identical(toy_graph, config):
    first = live_update(toy_graph, config, progress=False)
    second = live_update(toy_graph, config, progress=False)

    strip = {"wall_time"}
    assert [r.model_dump(exclude=strip) for r in first.records] == [
        r.model_dump(exclude=strip) for r in second.records
    ]
    for name, value in first.model.state_dict().items():
        np.testing.assert_array_equal(value, second.model.state_dict()[name])


def test_other_seed_changes_the_run(toy_graph):
    first = live_update(toy_graph, small_config(seed=1), progress=False)
    second = live_update(toy_graph, small_config(seed=2), progress=False)

    assert not np.allclose(first.state.layers[0], second.state.layers[0])


def test_explainer_losses_are_reported(toy_graph):
    config = small_config(train={"alpha": 0.3, "beta": 0.3})
    result = live_update(toy_graph, config, progress=False)

    assert all(r.ce is not None for r in result.records)
    assert any(r.cons > 0.0 for r in result.records)


def test_history_archives_tracked_nodes(toy_graph, config):
    result = live_update(toy_graph, config, progress=False)

    assert result.history.snapshots == [0, 1, 2]
    node = int(result.tracked_nodes[0])
    assert (2, node) in result.history


def test_disabled_attention_reduces_to_the_backbone(toy_graph):
    """A longer buffer changes nothing once both attentions are off."""
    plain = {
        "explainer": {
            "structural_dim": 3,
            "temporal_dim": 3,
            "structural_attention": False,
            "temporal_attention": False,
        },
    }
    single = small_config(
        train={"buffer_size": 1, "explainer_epochs": 0, "alpha": 0.0, "beta": 0.0}, **plain
    )
    triple = small_config(
        train={"buffer_size": 3, "explainer_epochs": 0, "alpha": 0.0, "beta": 0.0}, **plain
    )

    short = live_update(toy_graph, single, progress=False)
    long = live_update(toy_graph, triple, progress=False)

    assert [r.mrr for r in long.records] == pytest.approx([r.mrr for r in short.records], abs=1e-12)
    assert short.model.explain(short.buffer).temporal.matrix(0).tolist() == [[1.0]]


def test_empty_future_snapshot_is_skipped():
    edges = [TimestampedEdge(0, 1, 0.0), TimestampedEdge(1, 2, 0.0), TimestampedEdge(2, 0, 2.0)]
    graph = bucket_snapshots(edges, BucketPolicy(duration=1.0), "degree", 4)
    config = small_config()

    result = live_update(graph, config, progress=False)

    assert graph[1].num_edges == 0
    assert result.records[0].mrr is None
    assert result.records[0].backbone_epochs == 0
    assert result.records[1].mrr is not None


def test_single_snapshot_cannot_be_trained(toy_edges):
    graph = bucket_snapshots(toy_edges, BucketPolicy(count=1), "degree", 4)

    with pytest.raises(BucketingError):
        live_update(graph, small_config(), progress=False)


def test_training_never_reads_planted_labels():
    source = inspect.getsource(training_service)

    assert "GroundTruth" not in source
    assert "ground_truth" not in source


def test_trained_snapshots_are_remembered(toy_graph, config):
    result = live_update(toy_graph, config, progress=False)

    assert result.revealed == {1, 2, 3}
    with pytest.raises(EmptyEvaluationSetError):
        result.holdout(toy_graph)


def test_holdout_follows_a_shortened_run(toy_graph):
    result = live_update(toy_graph, small_config(train={"num_steps": 2}), progress=False)

    assert result.revealed == {1, 2}
    assert result.holdout(toy_graph) == 3

    state, buffer = result.position(toy_graph, 3)
    assert buffer.indices == [0, 1, 2]
    assert state.num_nodes == 6
    assert result.buffer.indices == [0, 1]

    _, before_last = result.position(toy_graph, 1)
    assert before_last.indices == [0]
    with pytest.raises(ValueError):
        result.position(toy_graph, 0)


def test_explainer_epochs_anneal_to_the_final_temperature(toy_graph, monkeypatch):
    config = small_config(
        explainer={"structural_dim": 3, "temporal_dim": 3, "tau_start": 1.0, "tau_end": 0.1},
        train={"explainer_epochs": 4, "num_steps": 1},
    )
    model = DyExplainerModel(config, toy_graph.feature_dim)
    temperatures = []
    explain = model.explain

    def recording(buffer, mode="deterministic", rng=None, tau=None):
        if mode == "sample":
            temperatures.append(tau)
        return explain(buffer, mode, rng, tau)

    monkeypatch.setattr(model, "explain", recording)
    LiveUpdateTrainer(model, config, progress=False).run(toy_graph)

    assert len(temperatures) == 4
    assert temperatures[0] == pytest.approx(1.0)
    assert temperatures[-1] == pytest.approx(0.1)
    assert temperatures == sorted(temperatures, reverse=True)


def _relu(x):
    return np.maximum(x, 0.0)


def _readout(hidden, snapshot, params):
    """Ungated out-edge sum through W_s, then the per-step projection W_t."""
    projected = hidden @ params["explainer.W_s"].T
    aggregated = np.zeros((snapshot.num_nodes, projected.shape[1]))
    np.add.at(aggregated, snapshot.src, projected[snapshot.dst])
    return _relu(_relu(aggregated) @ params["explainer.W_t"].T)


def _scores(embeddings, src, dst, params):
    pairs = np.concatenate([embeddings[src], embeddings[dst]], axis=1)
    hidden = _relu(pairs @ params["head.W1"].T + params["head.b1"])
    logits = (hidden @ params["head.W2"].T + params["head.b2"]).ravel()
    return 1.0 / (1.0 + np.exp(-logits))


def test_ablated_pipeline_matches_a_plain_backbone_reference(toy_graph):
    config = small_config(
        explainer={
            "structural_dim": 3,
            "temporal_dim": 3,
            "structural_attention": False,
            "temporal_attention": False,
        },
        train={"explainer_epochs": 0, "alpha": 0.0, "beta": 0.0},
    )
    result = live_update(toy_graph, config, progress=False)
    model = result.model
    params = model.state_dict()

    state = model.backbone.initial_state(toy_graph.num_nodes)
    buffer = EmbeddingBuffer(config.train.buffer_size)
    for t in range(toy_graph.num_snapshots - 1):
        snapshot, future = toy_graph[t], toy_graph[t + 1]
        pipeline = model.forward(state, buffer, snapshot).embeddings
        state, hidden = model.backbone.encode(state, snapshot)
        buffer.push(snapshot, hidden.data)
        reference = _readout(hidden.data, snapshot, params)

        np.testing.assert_allclose(pipeline.data, reference, rtol=0.0, atol=1e-12)
        np.testing.assert_allclose(
            model.link_scores(pipeline, future.src, future.dst).data,
            _scores(reference, future.src, future.dst, params),
            rtol=0.0,
            atol=1e-12,
        )
        ranked = mrr(pipeline, future, model.head, 5, np.random.default_rng([3, t]))
        expected = mrr(Tensor(reference), future, model.head, 5, np.random.default_rng([3, t]))
        assert ranked == pytest.approx(expected, abs=1e-12)
