"""
Finite-Difference Gradient Checker

Compares tape gradients against central differences.
"""

from collections.abc import Callable, Mapping

import numpy as np

from dyexplainer.core.exceptions import NonFiniteError
from dyexplainer.numerics.tensor import GradTape, Tensor, backward


def _evaluate(fn: Callable[[], Tensor]) -> float:
    value = fn().item()
    if not np.isfinite(value):
        raise NonFiniteError("finite_diff_check", "Function value is not finite")
    return value


def finite_diff_check(
    fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    step: float = 1e-6,
) -> float:
    """
    Max relative error between analytic and central-difference gradients.

    `fn` rebuilds a scalar from the current values of `params`; any stochastic
    inputs must be frozen so repeated calls agree. The error of one entry is
    |analytic - numeric| / max(1, |numeric|).

    Raises:
        NonFiniteError: If `fn` evaluates to a non-finite value
    """
    with GradTape() as tape:
        tape.watch(params)
        loss = fn()
    analytic = backward(tape, loss)

    worst = 0.0
    for name, tensor in params.items():
        flat = tensor.data.reshape(-1)
        grad = analytic[name].reshape(-1)
        for index in range(flat.size):
            original = flat[index]
            flat[index] = original + step
            upper = _evaluate(fn)
            flat[index] = original - step
            lower = _evaluate(fn)
            flat[index] = original
            numeric = (upper - lower) / (2.0 * step)
            error = abs(grad[index] - numeric) / max(1.0, abs(numeric))
            worst = max(worst, error)
    return worst
