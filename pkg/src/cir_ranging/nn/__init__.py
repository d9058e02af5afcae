"""Minimal neural-network engine: conv/pool/dense/ReLU layers, MSE loss,
Adam, a finite-difference gradient oracle, and checkpoint serialization.

Hot kernels have two interchangeable backends (numba-jitted and pure numpy);
see backend.set_backend and the CIR_RANGING_BACKEND environment variable.
"""

from .adam import AdamState, adam_step
from .backend import available_backends, backend_name, get_backend, set_backend
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import (
    collect_gradients,
    gradient_check,
    model_loss,
    sample_parameter_indices,
)
from .layers import Conv2d, Dense, Flatten, MaxPool2x2, Relu, Sequential, mse_loss

__all__ = [
    "AdamState",
    "adam_step",
    "available_backends",
    "backend_name",
    "get_backend",
    "set_backend",
    "load_checkpoint",
    "save_checkpoint",
    "collect_gradients",
    "gradient_check",
    "model_loss",
    "sample_parameter_indices",
    "Conv2d",
    "Dense",
    "Flatten",
    "MaxPool2x2",
    "Relu",
    "Sequential",
    "mse_loss",
]
