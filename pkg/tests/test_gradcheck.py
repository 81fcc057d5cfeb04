"""
Finite-difference checks of the analytic gradients, from single ops up to the
full regularized objective.
"""

import numpy as np
import pytest

from dyexplainer.models.buffer import EmbeddingBuffer
from dyexplainer.models.history import AnchorSet, AttentionHistory
from dyexplainer.modules.model import DyExplainerModel
from dyexplainer.modules.regularizers import consistency_loss, continuity_loss, total_loss
from dyexplainer.numerics import ops
from dyexplainer.numerics.gradcheck import finite_diff_check
from dyexplainer.numerics.tensor import GradTape, Tensor, backward, parameter
from dyexplainer.services.evaluation_service import bce_with_negatives
from tests.conftest import small_config


def test_elementwise_chain():
    x = parameter([0.3, -1.2, 2.0], "x")

    def fn() -> Tensor:
        return ops.sum(ops.mul(ops.tanh(x), ops.sigmoid(ops.mul(x, 2.0))))

    assert finite_diff_check(fn, {"x": x}) < 1e-6


def test_masked_softmax_and_logsumexp():
    x = parameter(np.random.default_rng(3).normal(size=(2, 3, 3)), "x")
    mask = np.tril(np.ones((3, 3), dtype=bool))[np.newaxis]
    weights = Tensor(np.arange(18.0).reshape(2, 3, 3))

    def fn() -> Tensor:
        soft = ops.masked_softmax(x, mask)
        return ops.add(ops.sum(ops.mul(soft, weights)), ops.logsumexp(ops.reshape(x, (18,)), 0))

    assert finite_diff_check(fn, {"x": x}) < 1e-6


def test_cosine_similarity_and_segment_softmax():
    rng = np.random.default_rng(5)
    a = parameter(rng.normal(size=(4, 3)), "a")
    b = parameter(rng.normal(size=(4, 3)), "b")

    def fn() -> Tensor:
        sims = ops.cosine_similarity(a, b)
        return ops.sum(ops.mul(ops.segment_softmax(sims, [0, 0, 1, 1], 2), Tensor([1, 2, 3, 4])))

    assert finite_diff_check(fn, {"a": a, "b": b}) < 1e-6


def test_full_objective_gradient(toy_graph):
    config = small_config(train={"buffer_size": 3, "alpha": 0.2, "beta": 0.3})
    model = DyExplainerModel(config, toy_graph.feature_dim)

    # two buffered snapshots encoded ahead of the differentiated one
    state = model.backbone.initial_state(toy_graph.num_nodes)
    buffer = EmbeddingBuffer(3)
    for t in range(2):
        state, hidden = model.backbone.encode(state, toy_graph[t])
        buffer.push(toy_graph[t], hidden.numpy())
    snapshot, future = toy_graph[2], toy_graph[3]

    anchors = AnchorSet(anchors=(0, 2), positives=(1, 3), negatives=((4, 5), (0, 5)))
    history = AttentionHistory(capacity=4, matrix_size=3)
    negative = np.array([[1.0, 0.0, 0.0], [0.2, 0.8, 0.0], [0.1, 0.3, 0.6]])
    positive = np.array([[1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.3, 0.3, 0.4]])
    tracked = [1, 3, 4]
    for node in tracked:
        history.put(90, node, negative)
    positives = {node: positive for node in tracked}

    model.freeze(*model.modules)
    params = model.parameters()

    def fn() -> Tensor:
        result = model.forward(state, buffer, snapshot, "sample", np.random.default_rng(11), 0.5)
        l_ce = bce_with_negatives(result.embeddings, future, model.head, np.random.default_rng(12))
        l_cons = consistency_loss(result.explanation.latest, anchors)
        l_cont = continuity_loss(
            result.explanation.temporal, positives, history, tracked, {0, 1, 2}
        )
        return total_loss(l_ce, l_cons, l_cont, 0.2, 0.3)

    assert finite_diff_check(fn, params) < 1e-4


@pytest.mark.parametrize("module", ["backbone", "explainer", "head"])
def test_every_component_receives_gradient(toy_graph, module):
    config = small_config()
    model = DyExplainerModel(config, toy_graph.feature_dim)
    state = model.backbone.initial_state(toy_graph.num_nodes)
    params = model.parameters()
    with GradTape() as tape:
        tape.watch(params)
        result = model.forward(state, EmbeddingBuffer(3), toy_graph[0])
        loss = bce_with_negatives(
            result.embeddings, toy_graph[1], model.head, np.random.default_rng(0)
        )
    grads = backward(tape, loss)

    total = sum(np.abs(g).sum() for name, g in grads.items() if name.startswith(module))
    assert total > 0
