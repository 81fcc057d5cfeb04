"""
Tests for structural and temporal attention and the assembled explainer.
"""

import numpy as np
import pytest

from dyexplainer.core.exceptions import FullyMaskedRowError, ShapeError
from dyexplainer.models.buffer import EmbeddingBuffer
from dyexplainer.modules.explainer import (
    Explainer,
    structural_aggregate,
    structural_attention,
    structural_logits,
    temporal_aggregate,
    temporal_attention,
    temporal_mask,
)
from dyexplainer.modules.model import DyExplainerModel
from dyexplainer.numerics.init import glorot_uniform
from dyexplainer.numerics.tensor import Tensor
from dyexplainer.schemas.config import ExplainerConfig, GateParams
from tests.conftest import make_snapshot, small_config


@pytest.fixture
def snapshot():
    return make_snapshot([(0, 1), (0, 2), (1, 2), (3, 0)], num_nodes=5)


@pytest.fixture
def weights(rng):
    return Tensor(glorot_uniform(rng, (3, 4))), Tensor(glorot_uniform(rng, (6,)))


def test_logits_follow_edge_order(snapshot, weights, rng):
    w_s, a_s = weights
    logits = structural_logits(Tensor(rng.normal(size=(5, 4))), snapshot, w_s, a_s)

    assert logits.shape == (snapshot.num_edges,)


def test_logits_reject_wrong_embedding(snapshot, weights):
    w_s, a_s = weights

    with pytest.raises(ShapeError):
        structural_logits(Tensor(np.ones((4, 4))), snapshot, w_s, a_s)


def test_gates_live_on_the_edge_support(snapshot, rng):
    logits = Tensor(rng.normal(size=snapshot.num_edges))
    att = structural_attention(logits, snapshot, GateParams(tau=0.5), "sample", rng)
    dense = att.as_dense()

    off_support = np.ones((5, 5), dtype=bool)
    off_support[snapshot.src, snapshot.dst] = False
    assert np.all(dense[off_support] == 0.0)
    assert att.gates.min() >= 0.0
    assert att.gates.max() <= 1.0
    assert [(s, d) for s, d, _ in att.triples()] == snapshot.edges


def test_deterministic_gates_repeat(snapshot):
    logits = Tensor([0.3, -0.2, 1.5, 0.0])

    first = structural_attention(logits, snapshot, GateParams()).gates
    second = structural_attention(logits, snapshot, GateParams()).gates

    np.testing.assert_array_equal(first, second)
    # a zero logit sits at the gate midpoint
    assert first[3] == pytest.approx(0.5)


def test_sampled_gates_need_a_generator(snapshot):
    with pytest.raises(ValueError):
        structural_attention(Tensor(np.zeros(4)), snapshot, GateParams(), "sample", None)


def test_disabled_attention_keeps_every_edge(snapshot):
    att = structural_attention(Tensor(np.zeros(4)), snapshot, GateParams(), enabled=False)

    assert att.gates.tolist() == [1.0, 1.0, 1.0, 1.0]


def test_softmax_variant_normalizes_per_source(snapshot):
    att = structural_attention(
        Tensor([1.0, 2.0, 0.5, -1.0]), snapshot, GateParams(), softmax=True
    )

    totals = np.zeros(5)
    np.add.at(totals, snapshot.src, att.gates)
    assert totals[[0, 1, 3]].tolist() == pytest.approx([1.0, 1.0, 1.0])


def test_logit_count_must_match_edges(snapshot):
    with pytest.raises(ShapeError):
        structural_attention(Tensor(np.zeros(3)), snapshot, GateParams())


def test_aggregation_runs_over_out_edges(snapshot):
    att = structural_attention(Tensor(np.zeros(4)), snapshot, GateParams(), enabled=False)
    h = Tensor(np.eye(5, 4) + 1.0)

    out = structural_aggregate(h, att, Tensor(np.eye(4)))

    # nodes 2 and 4 have no out-edges
    assert out.data[2].tolist() == [0.0, 0.0, 0.0, 0.0]
    assert out.data[4].tolist() == [0.0, 0.0, 0.0, 0.0]
    np.testing.assert_allclose(out.data[0], h.data[1] + h.data[2])


def test_closed_gates_silence_a_node(snapshot):
    att = structural_attention(Tensor([-50.0, -50.0, 1.0, 1.0]), snapshot, GateParams())

    out = structural_aggregate(Tensor(np.ones((5, 4))), att, Tensor(np.eye(4)))

    assert out.data[0].tolist() == [0.0, 0.0, 0.0, 0.0]


def test_causal_mask():
    mask = temporal_mask(3)

    assert mask.tolist() == [
        [True, False, False],
        [True, True, False],
        [True, True, True],
    ]


def test_windowed_mask_keeps_recent_steps():
    mask = temporal_mask(4, window=2)

    assert mask[3].tolist() == [False, False, True, True]
    assert mask[0].tolist() == [True, False, False, False]


def test_disabled_temporal_attention_is_diagonal():
    assert np.array_equal(temporal_mask(3, enabled=False), np.eye(3, dtype=bool))


def test_temporal_rows_are_distributions(rng):
    stack = Tensor(rng.normal(size=(4, 3, 2)))
    att = temporal_attention(
        stack, temporal_mask(3), Tensor(np.eye(2)), Tensor(rng.normal(size=4)), [5, 6, 7]
    )

    np.testing.assert_allclose(att.values.data.sum(axis=2), np.ones((4, 3)))
    assert np.all(att.values.data[:, 0, 1:] == 0.0)
    assert att.snapshot == 7
    assert att.mean_matrix().shape == (3, 3)


def test_later_steps_do_not_reach_earlier_embeddings(rng):
    stack = rng.normal(size=(4, 3, 2))
    w_t = Tensor(rng.normal(size=(2, 2)))
    a_t = Tensor(rng.normal(size=4))
    changed = stack.copy()
    changed[:, 2] = rng.normal(size=(4, 2))

    refined = []
    for values in (stack, changed):
        att = temporal_attention(Tensor(values), temporal_mask(3), w_t, a_t, [0, 1, 2])
        refined.append(temporal_aggregate(Tensor(values), att, w_t)[0].data)

    np.testing.assert_array_equal(refined[0][:, :2], refined[1][:, :2])
    assert not np.allclose(refined[0][:, 2], refined[1][:, 2])


def test_single_step_attends_to_itself(rng):
    att = temporal_attention(
        Tensor(rng.normal(size=(3, 1, 2))), temporal_mask(1), Tensor(np.eye(2)),
        Tensor(np.ones(4)), [0],
    )

    assert att.matrix(2).tolist() == [[1.0]]


def test_empty_mask_row_is_an_error(rng):
    mask = temporal_mask(2)
    mask[1] = False

    with pytest.raises(FullyMaskedRowError):
        temporal_attention(
            Tensor(rng.normal(size=(2, 2, 2))), mask, Tensor(np.eye(2)),
            Tensor(np.ones(4)), [0, 1],
        )


def test_explain_needs_entries(rng):
    explainer = Explainer(ExplainerConfig(structural_dim=3, temporal_dim=3), 4, rng)

    with pytest.raises(ShapeError):
        explainer.explain([])


def test_model_explains_every_buffered_snapshot(toy_graph):
    config = small_config()
    model = DyExplainerModel(config, toy_graph.feature_dim)
    state = model.backbone.initial_state(toy_graph.num_nodes)
    buffer = EmbeddingBuffer(config.train.buffer_size)
    for t in range(4):
        state, hidden = model.backbone.encode(state, toy_graph[t])
        buffer.push(toy_graph[t], hidden.numpy())

    explanation = model.explain(buffer)

    assert [att.index for att in explanation.structural] == [1, 2, 3]
    assert explanation.temporal.steps == (1, 2, 3)
    assert explanation.latest.index == 3
    assert explanation.embeddings.shape == (6, config.explainer.temporal_dim)
    assert explanation.refined.shape == (6, 3, config.explainer.temporal_dim)
