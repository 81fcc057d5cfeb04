"""
Tensor and Gradient Tape

A dense float64 tensor with reverse-mode differentiation. Operations record
themselves on the active `GradTape`; `backward` walks the tape in reverse
recording order, which is a reverse topological order of the graph.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator, Mapping
from contextvars import ContextVar
from typing import TYPE_CHECKING, Any

import numpy as np

from dyexplainer.core.exceptions import NonFiniteError, ShapeError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

VJP = Callable[["NDArray[np.float64]"], tuple["NDArray[np.float64] | None", ...]]

_active_tape: ContextVar[GradTape | None] = ContextVar("dyexplainer_active_tape", default=None)


class Tensor:
    """Row-major float64 array with an optional link into the gradient graph."""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: str | None = None,
    ):
        self.data: NDArray[np.float64] = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.op = "leaf"
        self.parents: tuple[Tensor, ...] = ()
        self.vjp: VJP | None = None

    @classmethod
    def from_op(
        cls,
        data: NDArray[np.float64],
        parents: tuple[Tensor, ...],
        op: str,
        vjp: VJP,
    ) -> Tensor:
        """Build an op output, recording it when a tape is active."""
        if not np.all(np.isfinite(data)):
            raise NonFiniteError(op)
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.name = None
        out.op = op
        tape = _active_tape.get()
        out.requires_grad = tape is not None and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out.parents = parents
            out.vjp = vjp
            assert tape is not None
            tape.record(out)
        else:
            out.parents = ()
            out.vjp = None
        return out

    # ==================== Introspection ====================

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> NDArray[np.float64]:
        return self.data.copy()

    def detach(self) -> Tensor:
        """Same values, cut from the gradient history."""
        return Tensor(self.data, requires_grad=False, name=self.name)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, op={self.op!r}{label})"

    # ==================== Operator sugar ====================

    def __add__(self, other: Any) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.div(other, self)

    def __neg__(self) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from dyexplainer.numerics import ops

        return ops.matmul(self, other)

    @property
    def T(self) -> Tensor:  # noqa: N802
        from dyexplainer.numerics import ops

        return ops.transpose(self)


def parameter(data: ArrayLike, name: str) -> Tensor:
    """Create a trainable tensor."""
    return Tensor(data, requires_grad=True, name=name)


class GradTape:
    """
    Records differentiable operations in execution order.

    A tape is single-owner: record on it from one thread only. Tapes nest;
    leaving a nested tape restores the outer one.
    """

    def __init__(self) -> None:
        self.nodes: list[Tensor] = []
        self.parameters: dict[str, Tensor] = {}
        self._tokens: list[Any] = []

    def __enter__(self) -> GradTape:
        self._tokens.append(_active_tape.set(self))
        return self

    def __exit__(self, *exc_info: object) -> None:
        _active_tape.reset(self._tokens.pop())

    def record(self, node: Tensor) -> None:
        self.nodes.append(node)

    def watch(self, params: Mapping[str, Tensor]) -> None:
        """Register named trainable tensors whose gradients `backward` reports."""
        for name, tensor in params.items():
            if not tensor.requires_grad:
                raise ShapeError(f"Parameter '{name}' is not trainable")
            self.parameters[name] = tensor

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.nodes)

    def dump(self) -> str:
        """Text rendering of the recorded graph, one node per line."""
        labels: dict[int, str] = {}
        for name, tensor in self.parameters.items():
            labels[id(tensor)] = name
        lines = []
        for index, node in enumerate(self.nodes):
            labels[id(node)] = f"%{index}"
            inputs = ", ".join(labels.get(id(p), f"<{p.op}{list(p.shape)}>") for p in node.parents)
            lines.append(f"%{index} = {node.op}({inputs}) -> {list(node.shape)}")
        return "\n".join(lines)


def no_grad_active() -> bool:
    """True when no tape is recording."""
    return _active_tape.get() is None


def backward(tape: GradTape, loss: Tensor) -> dict[str, NDArray[np.float64]]:
    """
    Reverse-mode gradients of a scalar `loss` for every watched parameter.

    Parameters that the loss does not reach receive zero gradients.

    Raises:
        ShapeError: If `loss` is not a scalar
        NonFiniteError: If a gradient turns NaN or infinite, naming the op
    """
    if loss.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")

    grads: dict[int, NDArray[np.float64]] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        upstream = grads.get(id(node))
        if upstream is None or node.vjp is None:
            continue
        if not any(p.requires_grad for p in node.parents):
            continue
        parent_grads = node.vjp(upstream)
        for parent, grad in zip(node.parents, parent_grads, strict=True):
            if grad is None or not parent.requires_grad:
                continue
            if not np.all(np.isfinite(grad)):
                raise NonFiniteError(node.op, f"Non-finite gradient in backward of op '{node.op}'")
            if grad.shape != parent.data.shape:
                raise ShapeError(
                    f"Gradient shape {grad.shape} of op '{node.op}' does not match "
                    f"input shape {parent.data.shape}"
                )
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = grad

    return {
        name: grads.get(id(tensor), np.zeros_like(tensor.data))
        for name, tensor in tape.parameters.items()
    }
