"""
Optimizers

Stochastic gradient descent with momentum over named parameters.
"""

from collections.abc import Mapping

import numpy as np
from numpy.typing import NDArray

from dyexplainer.numerics.tensor import Tensor


class SGD:
    """Momentum SGD; updates parameter storage in place."""

    def __init__(self, params: Mapping[str, Tensor], lr: float, momentum: float = 0.9):
        self.params = dict(params)
        self.lr = lr
        self.momentum = momentum
        self.velocity: dict[str, NDArray[np.float64]] = {
            name: np.zeros_like(tensor.data) for name, tensor in self.params.items()
        }

    def step(self, grads: Mapping[str, NDArray[np.float64]]) -> None:
        for name, tensor in self.params.items():
            grad = grads.get(name)
            if grad is None:
                continue
            velocity = self.momentum * self.velocity[name] + grad
            self.velocity[name] = velocity
            tensor.data = tensor.data - self.lr * velocity
