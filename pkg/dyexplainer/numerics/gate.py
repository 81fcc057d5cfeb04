"""
Binary-Concrete Gate

Relaxed Bernoulli edge gates with stretching and clipping, plus the
temperature annealing schedule used while fine-tuning attention.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import expit, logit

from dyexplainer.core.exceptions import GateDomainError
from dyexplainer.numerics import ops
from dyexplainer.numerics.tensor import Tensor
from dyexplainer.schemas.config import GateParams

if TYPE_CHECKING:
    from numpy.typing import NDArray

DETERMINISTIC_EPSILON = 0.5


def _check_epsilon(epsilon: NDArray[np.float64]) -> None:
    if np.any(epsilon <= 0.0) or np.any(epsilon >= 1.0):
        raise GateDomainError("Gate noise epsilon must lie strictly inside (0, 1)")


def concrete_gate(omega: float, epsilon: float, params: GateParams) -> float:
    """
    Scalar gate value in [0, 1].

    Raises:
        GateDomainError: If epsilon is not inside (0, 1)
    """
    _check_epsilon(np.asarray(epsilon))
    relaxed = float(expit((logit(epsilon) + omega) / params.tau))
    stretched = relaxed * (params.xi - params.gamma) + params.gamma
    return min(1.0, max(0.0, stretched))


def gate_tensor(omega: Tensor, epsilon: NDArray[np.float64], params: GateParams) -> Tensor:
    """Differentiable gates for a vector of logits with frozen noise samples."""
    noise = np.asarray(epsilon, dtype=np.float64)
    _check_epsilon(noise)
    relaxed = ops.sigmoid(ops.div(ops.add(omega, logit(noise)), params.tau))
    stretched = ops.add(ops.mul(relaxed, params.xi - params.gamma), params.gamma)
    return ops.clip(stretched, 0.0, 1.0)


def deterministic_gate(omega: Tensor, params: GateParams) -> Tensor:
    """Noise-free gate: epsilon fixed at 0.5 and unit temperature."""
    epsilon = np.full(omega.shape, DETERMINISTIC_EPSILON)
    return gate_tensor(omega, epsilon, params.model_copy(update={"tau": 1.0}))


def sample_epsilon(rng: np.random.Generator, size: int | tuple[int, ...]) -> NDArray[np.float64]:
    """Uniform noise on the open interval (0, 1)."""
    return rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=size)


def anneal_temperature(epoch: int, total: int, start: float = 1.0, end: float = 0.1) -> float:
    """Exponential decay from `start` towards `end`, reaching `end` at epoch == total."""
    if total <= 0:
        return start
    return start * math.pow(end / start, epoch / total)


def temperature_schedule(epochs: int, start: float = 1.0, end: float = 0.1) -> list[float]:
    """Per-epoch temperatures: `start` first and `end` last; one epoch runs at `start`."""
    return [anneal_temperature(epoch, epochs - 1, start, end) for epoch in range(epochs)]
