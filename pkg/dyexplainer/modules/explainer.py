"""
Explainer

Structural hard attention over each buffered snapshot's edges and temporal
attention over the buffered snapshots of every node. The gates and the
temporal weights are the explanations; the refined embeddings feed the link
head.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from dyexplainer.core.exceptions import ShapeError
from dyexplainer.models.attention import StructuralAttention, TemporalAttention
from dyexplainer.models.graph import Snapshot
from dyexplainer.modules.base import Module
from dyexplainer.numerics import ops
from dyexplainer.numerics.gate import deterministic_gate, gate_tensor, sample_epsilon
from dyexplainer.numerics.init import glorot_uniform
from dyexplainer.numerics.tensor import Tensor
from dyexplainer.schemas.config import ExplainerConfig, GateParams

GateMode = Literal["sample", "deterministic"]


def _halves(a: Tensor, width: int) -> tuple[Tensor, Tensor]:
    """Split an attention vector of length 2*width into two width x 1 columns."""
    if a.shape != (2 * width,):
        raise ShapeError(f"Attention vector has shape {a.shape}, expected ({2 * width},)")
    first = ops.reshape(ops.take(a, np.arange(width)), (width, 1))
    second = ops.reshape(ops.take(a, np.arange(width, 2 * width)), (width, 1))
    return first, second


# ==================== Structural attention ====================


def structural_logits(
    h: Tensor,
    snapshot: Snapshot,
    w_s: Tensor,
    a_s: Tensor,
    slope: float = 0.2,
) -> Tensor:
    """
    Per-edge logits LeakyReLU(a^T [W h_i || W h_j]) in snapshot edge order.

    Raises:
        ShapeError: If `h` does not have one row per node of matching width
    """
    if h.ndim != 2 or h.shape[0] != snapshot.num_nodes or h.shape[1] != w_s.shape[1]:
        raise ShapeError(
            f"Embedding shape {h.shape} does not fit {snapshot.num_nodes} nodes "
            f"and weight {w_s.shape}"
        )
    projected = ops.matmul(h, w_s.T)
    a_src, a_dst = _halves(a_s, w_s.shape[0])
    num_nodes = snapshot.num_nodes
    source_score = ops.reshape(ops.matmul(projected, a_src), (num_nodes,))
    target_score = ops.reshape(ops.matmul(projected, a_dst), (num_nodes,))
    raw = ops.add(ops.take(source_score, snapshot.src), ops.take(target_score, snapshot.dst))
    return ops.leaky_relu(raw, slope)


def structural_attention(
    logits: Tensor,
    snapshot: Snapshot,
    gate: GateParams,
    mode: GateMode = "deterministic",
    rng: np.random.Generator | None = None,
    enabled: bool = True,
    softmax: bool = False,
) -> StructuralAttention:
    """
    Gate every existing edge independently.

    In "sample" mode the noise comes from `rng`; "deterministic" fixes it at
    0.5. A disabled attention keeps every edge with gate 1; `softmax`
    normalizes logits per source node instead of gating.
    """
    if logits.shape != (snapshot.num_edges,):
        raise ShapeError(
            f"Expected {snapshot.num_edges} logits for snapshot {snapshot.index}, "
            f"got shape {logits.shape}"
        )
    if not enabled:
        values = Tensor(np.ones(snapshot.num_edges))
    elif softmax:
        values = ops.segment_softmax(logits, snapshot.src, snapshot.num_nodes)
    elif mode == "sample":
        if rng is None:
            raise ValueError("sampled gates need a random generator")
        values = gate_tensor(logits, sample_epsilon(rng, snapshot.num_edges), gate)
    else:
        values = deterministic_gate(logits, gate)
    return StructuralAttention(
        index=snapshot.index,
        num_nodes=snapshot.num_nodes,
        src=snapshot.src,
        dst=snapshot.dst,
        values=values,
        logits=logits,
    )


def structural_aggregate(h: Tensor, att: StructuralAttention, w_s: Tensor) -> Tensor:
    """relu(A_hat H W_s^T): gated sum over each node's out-edges."""
    if h.ndim != 2 or h.shape[0] != att.num_nodes or h.shape[1] != w_s.shape[1]:
        raise ShapeError(f"Embedding shape {h.shape} does not fit weight {w_s.shape}")
    projected = ops.matmul(h, w_s.T)
    gates = ops.reshape(att.values, (att.num_edges, 1))
    messages = ops.mul(ops.take(projected, att.dst), gates)
    return ops.relu(ops.scatter_add(messages, att.src, att.num_nodes))


# ==================== Temporal attention ====================


def temporal_mask(size: int, window: int | None = None, enabled: bool = True) -> NDArray[np.bool_]:
    """
    Causal b x b mask: row k may attend to columns j <= k.

    `window` keeps only the last `window` positions of each row; a disabled
    temporal attention leaves only the diagonal.
    """
    rows, cols = np.indices((size, size))
    if not enabled:
        return rows == cols
    mask = cols <= rows
    if window is not None:
        mask &= cols > rows - window
    return mask


def temporal_attention(
    stack: Tensor,
    mask: NDArray[np.bool_],
    w_t: Tensor,
    a_t: Tensor,
    steps: Sequence[int],
    slope: float = 0.2,
) -> TemporalAttention:
    """
    Batched per-node attention between buffered steps.

    `stack` is N x b x F' (oldest step first). Logits are
    LeakyReLU(a^T [W h_k || W h_j]) and each row is softmax-normalized over
    its mask.

    Raises:
        ShapeError: If the stack, mask and steps disagree on b
        FullyMaskedRowError: If a mask row allows nothing
    """
    if stack.ndim != 3 or stack.shape[2] != w_t.shape[1]:
        raise ShapeError(f"Temporal input has shape {stack.shape}, weight {w_t.shape}")
    num_nodes, size, _ = stack.shape
    if mask.shape != (size, size) or len(steps) != size:
        raise ShapeError(f"Mask {mask.shape} and {len(steps)} steps do not match b={size}")

    projected = ops.matmul(stack, w_t.T)
    a_row, a_col = _halves(a_t, w_t.shape[0])
    row_score = ops.matmul(projected, a_row)
    col_score = ops.transpose(ops.matmul(projected, a_col), (0, 2, 1))
    logits = ops.leaky_relu(ops.add(row_score, col_score), slope)
    weights = ops.masked_softmax(logits, mask[np.newaxis, :, :], axis=-1)
    return TemporalAttention(
        values=weights,
        mask=mask,
        steps=tuple(steps),
        nodes=np.arange(num_nodes),
    )


def temporal_aggregate(stack: Tensor, att: TemporalAttention, w_t: Tensor) -> tuple[Tensor, Tensor]:
    """
    relu(A_tilde (H W^T)) for every buffered step.

    Returns the N x b x K embeddings of all steps and the N x K last step.
    """
    if stack.ndim != 3 or stack.shape[1] != att.size:
        raise ShapeError(f"Temporal input has shape {stack.shape}, attention b={att.size}")
    projected = ops.matmul(stack, w_t.T)
    refined = ops.relu(ops.matmul(att.values, projected))
    return refined, ops.take(refined, att.size - 1, axis=1)


# ==================== Module ====================


@dataclass(frozen=True, eq=False)
class Explanation:
    """Explainer outputs for one buffer: gates per entry, temporal weights, H'."""

    structural: list[StructuralAttention]
    temporal: TemporalAttention
    refined: Tensor
    embeddings: Tensor

    @property
    def latest(self) -> StructuralAttention:
        return self.structural[-1]


class Explainer(Module):
    """Weights W^(s), a^(s) (structural) and W, a (temporal)."""

    prefix = "explainer"

    def __init__(self, config: ExplainerConfig, hidden_dim: int, rng: np.random.Generator):
        super().__init__()
        self.config = config
        f_s, f_t = config.structural_dim, config.temporal_dim
        self.register("W_s", glorot_uniform(rng, (f_s, hidden_dim)))
        self.register("a_s", glorot_uniform(rng, (2 * f_s,)))
        self.register("W_t", glorot_uniform(rng, (f_t, f_s)))
        self.register("a_t", glorot_uniform(rng, (2 * f_t,)))

    def attend(
        self,
        h: Tensor,
        snapshot: Snapshot,
        mode: GateMode,
        rng: np.random.Generator | None,
        tau: float | None = None,
    ) -> StructuralAttention:
        config = self.config
        gate = config.gate if tau is None else config.gate.model_copy(update={"tau": tau})
        logits = structural_logits(h, snapshot, self["W_s"], self["a_s"], config.leaky_slope)
        return structural_attention(
            logits,
            snapshot,
            gate,
            mode,
            rng,
            enabled=config.structural_attention,
            softmax=config.structural_softmax,
        )

    def explain(
        self,
        entries: Sequence[tuple[Snapshot, Tensor]],
        mode: GateMode = "deterministic",
        rng: np.random.Generator | None = None,
        tau: float | None = None,
    ) -> Explanation:
        """
        Run both attentions over buffered (snapshot, H) pairs, oldest first.

        Raises:
            ShapeError: If `entries` is empty
        """
        if not entries:
            raise ShapeError("explain needs at least one buffered embedding")
        config = self.config
        structural = []
        aggregated = []
        for snapshot, h in entries:
            att = self.attend(h, snapshot, mode, rng, tau)
            structural.append(att)
            aggregated.append(structural_aggregate(h, att, self["W_s"]))

        stack = ops.stack(aggregated, axis=1)
        mask = temporal_mask(len(entries), config.temporal_window, config.temporal_attention)
        steps = [snapshot.index for snapshot, _ in entries]
        temporal = temporal_attention(
            stack, mask, self["W_t"], self["a_t"], steps, config.leaky_slope
        )
        refined, embeddings = temporal_aggregate(stack, temporal, self["W_t"])
        return Explanation(structural, temporal, refined, embeddings)
