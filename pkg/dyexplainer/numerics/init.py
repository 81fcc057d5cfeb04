"""Parameter initializers."""

import numpy as np
from numpy.typing import NDArray


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> NDArray[np.float64]:
    """Glorot/Xavier uniform initialization for a weight of `shape` (fan_out, fan_in)."""
    fan_out, fan_in = (shape[0], shape[-1]) if len(shape) > 1 else (1, shape[0])
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
