"""
Backbone Encoder

Stacked message-passing layers whose outputs update a per-layer node state
through GRU cells, one snapshot at a time.
"""

from collections.abc import Mapping

import numpy as np

from dyexplainer.core.exceptions import ShapeError
from dyexplainer.models.buffer import NodeState
from dyexplainer.models.graph import Snapshot
from dyexplainer.modules.base import Module
from dyexplainer.numerics import ops
from dyexplainer.numerics.init import glorot_uniform
from dyexplainer.numerics.tensor import Tensor
from dyexplainer.schemas.config import BackboneConfig

GRU_GATES = ("z", "r", "h")


def gnn_layer(
    h_in: Tensor,
    snapshot: Snapshot,
    w_self: Tensor,
    w_nbr: Tensor,
    skip_connection: bool = True,
) -> Tensor:
    """
    One sum-aggregation layer over the symmetrized neighbourhoods.

    H_out = relu(H W_self^T + A H W_nbr^T), plus H_in when the skip
    connection is on and the widths agree.

    Raises:
        ShapeError: If H_in does not have one row per node
    """
    if h_in.ndim != 2 or h_in.shape[0] != snapshot.num_nodes:
        raise ShapeError(
            f"Layer input has shape {h_in.shape}, expected {snapshot.num_nodes} rows"
        )
    messages = ops.spmm(snapshot.symmetric_adjacency, h_in)
    out = ops.relu(ops.add(ops.matmul(h_in, w_self.T), ops.matmul(messages, w_nbr.T)))
    if skip_connection and out.shape == h_in.shape:
        out = ops.add(out, h_in)
    return out


def gru_update(h_new: Tensor, h_prev: Tensor, weights: Mapping[str, Tensor]) -> Tensor:
    """
    Row-wise GRU cell with input `h_new` and hidden state `h_prev`.

    `weights` holds W_g, U_g and b_g for each gate g in (z, r, h).

    Raises:
        ShapeError: If the two inputs differ in shape
    """
    if h_new.shape != h_prev.shape:
        raise ShapeError(f"GRU inputs differ in shape: {h_new.shape} vs {h_prev.shape}")

    def affine(x: Tensor, h: Tensor, gate: str) -> Tensor:
        return ops.add(
            ops.add(ops.matmul(x, weights[f"W_{gate}"].T), ops.matmul(h, weights[f"U_{gate}"].T)),
            weights[f"b_{gate}"],
        )

    update = ops.sigmoid(affine(h_new, h_prev, "z"))
    reset = ops.sigmoid(affine(h_new, h_prev, "r"))
    candidate = ops.tanh(affine(h_new, ops.mul(reset, h_prev), "h"))
    return ops.add(ops.mul(ops.sub(1.0, update), h_prev), ops.mul(update, candidate))


def normalize_rows(x: Tensor, eps: float = 1e-12) -> Tensor:
    """L2-normalize each row; all-zero rows stay zero."""
    norms = ops.sqrt(ops.add(ops.sum(ops.square(x), axis=1, keepdims=True), eps))
    return ops.div(x, norms)


class Backbone(Module):
    """Parameters and forward pass of the GRU-updated GNN stack."""

    prefix = "backbone"

    def __init__(self, config: BackboneConfig, input_dim: int, rng: np.random.Generator):
        super().__init__()
        self.config = config
        self.input_dim = input_dim
        hidden = config.hidden_dim
        for layer in range(config.num_layers):
            width = input_dim if layer == 0 else hidden
            self.register(f"layer{layer}.W_self", glorot_uniform(rng, (hidden, width)))
            self.register(f"layer{layer}.W_nbr", glorot_uniform(rng, (hidden, width)))
            for gate in GRU_GATES:
                self.register(f"layer{layer}.W_{gate}", glorot_uniform(rng, (hidden, hidden)))
                self.register(f"layer{layer}.U_{gate}", glorot_uniform(rng, (hidden, hidden)))
                self.register(f"layer{layer}.b_{gate}", np.zeros(hidden))

    def gru_weights(self, layer: int) -> dict[str, Tensor]:
        return {
            f"{kind}_{gate}": self[f"layer{layer}.{kind}_{gate}"]
            for gate in GRU_GATES
            for kind in ("W", "U", "b")
        }

    def initial_state(self, num_nodes: int) -> NodeState:
        return NodeState.zeros(num_nodes, self.config.hidden_dim, self.config.num_layers)

    def encode(self, state: NodeState, snapshot: Snapshot) -> tuple[NodeState, Tensor]:
        return encode_snapshot(state, snapshot, self)


def encode_snapshot(
    state: NodeState,
    snapshot: Snapshot,
    backbone: Backbone,
) -> tuple[NodeState, Tensor]:
    """
    Encode one snapshot against the previous hierarchical state.

    Each layer message-passes on the snapshot, then GRU-updates against the
    stored layer state. Returns the detached new state and the top layer H^(t),
    which keeps its gradient history.
    """
    config = backbone.config
    if state.num_nodes != snapshot.num_nodes or len(state.layers) != config.num_layers:
        raise ShapeError(
            f"Node state ({state.num_nodes} nodes, {len(state.layers)} layers) does not fit "
            f"a {snapshot.num_nodes}-node snapshot and {config.num_layers} layers"
        )
    if snapshot.features.shape[1] != backbone.input_dim:
        raise ShapeError(
            f"Snapshot features have width {snapshot.features.shape[1]}, "
            f"backbone expects {backbone.input_dim}"
        )

    x = Tensor(snapshot.features)
    layers: list[Tensor] = []
    for layer in range(config.num_layers):
        messages = gnn_layer(
            x,
            snapshot,
            backbone[f"layer{layer}.W_self"],
            backbone[f"layer{layer}.W_nbr"],
            config.skip_connections,
        )
        if config.row_normalize:
            messages = normalize_rows(messages)
        x = gru_update(messages, Tensor(state.layers[layer]), backbone.gru_weights(layer))
        layers.append(x)

    return NodeState(tuple(h.numpy() for h in layers)), layers[-1]
