"""
Module Base

Named parameter registry shared by the backbone, explainer and link head.
"""

from collections.abc import Mapping

import numpy as np
from numpy.typing import NDArray

from dyexplainer.core.exceptions import ShapeError
from dyexplainer.numerics.tensor import Tensor, parameter


class Module:
    """A component owning trainable tensors under a name prefix."""

    prefix = "module"

    def __init__(self) -> None:
        self._params: dict[str, Tensor] = {}

    def register(self, name: str, data: NDArray[np.float64]) -> Tensor:
        tensor = parameter(data, f"{self.prefix}.{name}")
        self._params[name] = tensor
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def parameters(self) -> dict[str, Tensor]:
        """Parameters keyed by their qualified name."""
        return {f"{self.prefix}.{name}": tensor for name, tensor in self._params.items()}

    def set_trainable(self, trainable: bool) -> None:
        """Frozen parameters record no gradient history."""
        for tensor in self._params.values():
            tensor.requires_grad = trainable

    def state_dict(self) -> dict[str, NDArray[np.float64]]:
        return {name: tensor.numpy() for name, tensor in self.parameters().items()}

    def load_state_dict(self, state: Mapping[str, NDArray[np.float64]]) -> None:
        """
        Copy values in from a qualified-name mapping.

        Raises:
            ShapeError: If a parameter is missing or has another shape
        """
        for name, tensor in self.parameters().items():
            if name not in state:
                raise ShapeError(f"Missing parameter '{name}'")
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise ShapeError(
                    f"Parameter '{name}' has shape {value.shape}, expected {tensor.shape}"
                )
            tensor.data = value.copy()
