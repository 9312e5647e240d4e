"""Kolmogorov-Arnold convolutional layers with a from-scratch autodiff engine."""

from .tensor import Tensor, Tape, tape, no_grad, backward, zeros, ones, as_tensor
from .basis import BasisSpec, basis_feature_count, evaluate_basis

__all__ = [
    "Tensor",
    "Tape",
    "tape",
    "no_grad",
    "backward",
    "zeros",
    "ones",
    "as_tensor",
    "BasisSpec",
    "basis_feature_count",
    "evaluate_basis",
]

__version__ = "0.1.0"
