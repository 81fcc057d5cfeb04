"""
Tensor Operations

Differentiable operations over `Tensor`. Each op computes its forward value
with numpy and attaches a vector-Jacobian product for `backward`.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import sparse
from scipy.special import expit

from dyexplainer.core.exceptions import FullyMaskedRowError, ShapeError
from dyexplainer.numerics.tensor import Tensor

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray


def as_tensor(value: Any) -> Tensor:
    """Wrap constants; tensors pass through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _unbroadcast(grad: NDArray[np.float64], shape: tuple[int, ...]) -> NDArray[np.float64]:
    """Sum a broadcast gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from exc


# ==================== Elementwise arithmetic ====================


def add(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), "add", vjp)


def sub(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), "sub", vjp)


def mul(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), "mul", vjp)


def div(a: Any, b: Any) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("div", a, b)
    out = a.data / b.data

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return Tensor.from_op(out, (a, b), "div", vjp)


def neg(a: Tensor) -> Tensor:
    return Tensor.from_op(-a.data, (a,), "neg", lambda g: (-g,))


def square(a: Tensor) -> Tensor:
    return Tensor.from_op(a.data * a.data, (a,), "square", lambda g: (2.0 * a.data * g,))


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)
    return Tensor.from_op(out, (a,), "sqrt", lambda g: (g / (2.0 * out),))


# ==================== Nonlinearities ====================


def relu(a: Tensor) -> Tensor:
    active = a.data > 0
    return Tensor.from_op(np.where(active, a.data, 0.0), (a,), "relu", lambda g: (g * active,))


def leaky_relu(a: Tensor, slope: float = 0.2) -> Tensor:
    active = a.data > 0
    scale = np.where(active, 1.0, slope)
    return Tensor.from_op(a.data * scale, (a,), "leaky_relu", lambda g: (g * scale,))


def sigmoid(a: Tensor) -> Tensor:
    out = expit(a.data)
    return Tensor.from_op(out, (a,), "sigmoid", lambda g: (g * out * (1.0 - out),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return Tensor.from_op(out, (a,), "tanh", lambda g: (g * (1.0 - out * out),))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return Tensor.from_op(out, (a,), "exp", lambda g: (g * out,))


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.data)
    return Tensor.from_op(out, (a,), "log", lambda g: (g / a.data,))


def clip(a: Tensor, low: float, high: float) -> Tensor:
    """Clamp to [low, high]; the gradient is zero wherever the clamp is active."""
    inside = (a.data > low) & (a.data < high)
    out = np.clip(a.data, low, high)
    return Tensor.from_op(out, (a,), "clip", lambda g: (g * inside,))


# ==================== Linear algebra & shape ====================


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; batched over leading axes as numpy does. Both operands need ndim >= 2."""
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs operands with ndim >= 2, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"matmul: incompatible batch shapes {a.shape} @ {b.shape}") from exc

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        grad_a = np.matmul(g, np.swapaxes(b.data, -1, -2))
        grad_b = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return Tensor.from_op(out, (a, b), "matmul", vjp)


def spmm(matrix: sparse.spmatrix | sparse.sparray, x: Tensor) -> Tensor:
    """Constant sparse matrix times a dense 2-D tensor."""
    if x.ndim != 2 or matrix.shape[1] != x.shape[0]:
        raise ShapeError(f"spmm: {matrix.shape} @ {x.shape}")
    csr = sparse.csr_matrix(matrix)
    out = np.asarray(csr @ x.data, dtype=np.float64)
    transposed = csr.T.tocsr()
    return Tensor.from_op(
        out, (x,), "spmm", lambda g: (np.asarray(transposed @ g, dtype=np.float64),)
    )


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = a.data.reshape(tuple(shape))
    except ValueError as exc:
        raise ShapeError(f"reshape: cannot view {a.shape} as {tuple(shape)}") from exc
    return Tensor.from_op(out, (a,), "reshape", lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    order = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(order))
    return Tensor.from_op(
        np.transpose(a.data, order), (a,), "transpose", lambda g: (np.transpose(g, inverse),)
    )


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]}") from exc
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64], ...]:
        return tuple(np.split(g, splits, axis=axis))

    return Tensor.from_op(out, tuple(tensors), "concat", vjp)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeError("stack needs at least one tensor")
    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise ShapeError(f"stack: tensors differ in shape {sorted(shapes)}")
    out = np.stack([t.data for t in tensors], axis=axis)

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64], ...]:
        return tuple(np.take(g, k, axis=axis) for k in range(len(tensors)))

    return Tensor.from_op(out, tuple(tensors), "stack", vjp)


def take(a: Tensor, indices: ArrayLike, axis: int = 0) -> Tensor:
    """Gather entries along `axis`; repeated indices accumulate gradient."""
    index = np.asarray(indices, dtype=np.int64)
    if index.ndim > 1:
        raise ShapeError(f"take: indices must be a scalar or 1-D, got shape {index.shape}")
    if index.size and (index.min() < -a.shape[axis] or index.max() >= a.shape[axis]):
        raise ShapeError(f"take: index out of range for axis {axis} of size {a.shape[axis]}")
    out = np.take(a.data, index, axis=axis)

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64]]:
        grad = np.zeros_like(a.data)
        moved = np.moveaxis(grad, axis, 0)
        if index.ndim == 0:
            moved[int(index)] += g
        else:
            np.add.at(moved, index, np.moveaxis(g, axis, 0))
        return (grad,)

    return Tensor.from_op(out, (a,), "take", vjp)


def scatter_add(values: Tensor, index: ArrayLike, num_segments: int) -> Tensor:
    """Sum rows of `values` into `num_segments` buckets given by `index` (axis 0)."""
    segment = np.asarray(index, dtype=np.int64)
    if segment.shape != (values.shape[0],):
        raise ShapeError(f"scatter_add: index shape {segment.shape} vs values {values.shape}")
    out = np.zeros((num_segments, *values.shape[1:]), dtype=np.float64)
    np.add.at(out, segment, values.data)
    return Tensor.from_op(out, (values,), "scatter_add", lambda g: (g[segment],))


# ==================== Reductions ====================


def sum(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    out = np.sum(a.data, axis=axis, keepdims=keepdims)

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64]]:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor.from_op(np.asarray(out), (a,), "sum", vjp)


def mean(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[ax] for ax in axes]))
    if count == 0:
        raise ShapeError("mean over an empty axis")
    return div(sum(a, axis=axis, keepdims=keepdims), float(count))


def logsumexp(a: Tensor, axis: int = -1) -> Tensor:
    peak = np.max(a.data, axis=axis, keepdims=True)
    shifted = np.exp(a.data - peak)
    total = shifted.sum(axis=axis, keepdims=True)
    out = (np.log(total) + peak).squeeze(axis)
    weights = shifted / total

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64]]:
        return (np.expand_dims(g, axis) * weights,)

    return Tensor.from_op(out, (a,), "logsumexp", vjp)


# ==================== Attention helpers ====================


def masked_softmax(a: Tensor, mask: ArrayLike, axis: int = -1) -> Tensor:
    """
    Softmax over `axis` restricted to positions where `mask` is true.

    Masked positions are exactly zero and unmasked positions sum to one.

    Raises:
        FullyMaskedRowError: If some row has no unmasked position
    """
    allowed = np.broadcast_to(np.asarray(mask, dtype=bool), a.shape)
    empty = ~allowed.any(axis=axis)
    if empty.any():
        row = tuple(int(i) for i in np.argwhere(empty)[0])
        raise FullyMaskedRowError(row[0] if len(row) == 1 else row)
    logits = np.where(allowed, a.data, -np.inf)
    peak = np.max(logits, axis=axis, keepdims=True)
    weights = np.where(allowed, np.exp(logits - peak), 0.0)
    out = weights / weights.sum(axis=axis, keepdims=True)

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64]]:
        inner = np.sum(g * out, axis=axis, keepdims=True)
        return (out * (g - inner),)

    return Tensor.from_op(out, (a,), "masked_softmax", vjp)


def segment_softmax(a: Tensor, segments: ArrayLike, num_segments: int) -> Tensor:
    """Softmax of a 1-D tensor within groups sharing a segment id."""
    segment = np.asarray(segments, dtype=np.int64)
    if a.ndim != 1 or segment.shape != a.shape:
        raise ShapeError(f"segment_softmax: values {a.shape} vs segments {segment.shape}")
    peak = np.full(num_segments, -np.inf)
    np.maximum.at(peak, segment, a.data)
    weights = np.exp(a.data - peak[segment])
    totals = np.zeros(num_segments)
    np.add.at(totals, segment, weights)
    out = weights / totals[segment]

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64]]:
        inner = np.zeros(num_segments)
        np.add.at(inner, segment, g * out)
        return (out * (g - inner[segment]),)

    return Tensor.from_op(out, (a,), "segment_softmax", vjp)


def cosine_similarity(a: Tensor, b: Tensor, axis: int = -1) -> Tensor:
    """Cosine similarity along `axis`; pairs with an all-zero side score 0."""
    if a.shape != b.shape:
        raise ShapeError(f"cosine_similarity: shapes {a.shape} and {b.shape} differ")
    norm_a = np.linalg.norm(a.data, axis=axis, keepdims=True)
    norm_b = np.linalg.norm(b.data, axis=axis, keepdims=True)
    defined = (norm_a > 0) & (norm_b > 0)
    safe_a = np.where(defined, norm_a, 1.0)
    safe_b = np.where(defined, norm_b, 1.0)
    dot = np.sum(a.data * b.data, axis=axis, keepdims=True)
    sim = np.where(defined, dot / (safe_a * safe_b), 0.0)

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        g = np.expand_dims(g, axis) * defined
        grad_a = g * (b.data / (safe_a * safe_b) - sim * a.data / (safe_a * safe_a))
        grad_b = g * (a.data / (safe_a * safe_b) - sim * b.data / (safe_b * safe_b))
        return grad_a, grad_b

    return Tensor.from_op(np.squeeze(sim, axis=axis), (a, b), "cosine_similarity", vjp)


def binary_cross_entropy(probs: Tensor, labels: ArrayLike, eps: float = 1e-12) -> Tensor:
    """Mean BCE of probabilities against 0/1 labels, clamping probabilities at `eps`."""
    target = np.asarray(labels, dtype=np.float64)
    if target.shape != probs.shape:
        raise ShapeError(f"binary_cross_entropy: labels {target.shape} vs probs {probs.shape}")
    p = np.clip(probs.data, eps, 1.0 - eps)
    losses = -(target * np.log(p) + (1.0 - target) * np.log1p(-p))
    inside = (probs.data > eps) & (probs.data < 1.0 - eps)

    def vjp(g: NDArray[np.float64]) -> tuple[NDArray[np.float64]]:
        grad = (-(target / p) + (1.0 - target) / (1.0 - p)) * inside / target.size
        return (g * grad,)

    return Tensor.from_op(np.asarray(losses.mean()), (probs,), "binary_cross_entropy", vjp)
