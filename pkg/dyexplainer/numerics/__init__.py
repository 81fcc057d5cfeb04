"""Dense float64 tensors with reverse-mode differentiation."""

from dyexplainer.numerics.tensor import GradTape, Tensor, backward, parameter

__all__ = ["GradTape", "Tensor", "backward", "parameter"]
