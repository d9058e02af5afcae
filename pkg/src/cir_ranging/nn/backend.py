"""Kernel backend selection.

Two interchangeable implementations of the conv/pool kernels exist: a
numba-jitted one and a pure-numpy one. The active backend is chosen at first
use from the CIR_RANGING_BACKEND environment variable ("numba" or "numpy"),
defaulting to numba when importable, and can be switched at runtime with
set_backend (layers look the backend up on every call).
"""

import importlib.util
import os

from ..errors import ConfigError

ENV_VAR = "CIR_RANGING_BACKEND"
_VALID = ("numba", "numpy")

_active_name: str | None = None
_active_module = None


def _numba_available() -> bool:
    return importlib.util.find_spec("numba") is not None


def available_backends() -> tuple[str, ...]:
    return _VALID if _numba_available() else ("numpy",)


def set_backend(name: str) -> None:
    """Select the kernel implementation ("numba" or "numpy")."""
    global _active_name, _active_module
    if name not in _VALID:
        raise ConfigError(f"unknown backend {name!r}; choose one of {_VALID}")
    if name == "numba":
        if not _numba_available():
            raise ConfigError("backend 'numba' requested but numba is not installed")
        from . import kernels_numba as module
    else:
        from . import kernels_numpy as module
    _active_name = name
    _active_module = module


def get_backend():
    """Active kernel module, initializing from the environment on first use."""
    if _active_module is None:
        env = os.environ.get(ENV_VAR)
        if env is not None:
            set_backend(env)
        else:
            set_backend("numba" if _numba_available() else "numpy")
    return _active_module


def backend_name() -> str:
    get_backend()
    assert _active_name is not None
    return _active_name
