"""Adam optimizer with bias-corrected moment estimates.

State is one (m, v) pair per parameter tensor plus a shared step counter.
The update is elementwise, so applying it tensor-by-tensor or over one flat
concatenation gives identical results.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError


@dataclass
class AdamState:
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params):
        params = list(params)
        return cls(
            t=0,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(
    params,
    grads,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    labels=None,
):
    """One in-place Adam update over parallel lists of parameters and gradients.

    labels, when given, name each tensor in diagnostics (e.g. "layer 3 w").
    """
    params = list(params)
    grads = list(grads)
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError(
            f"parameter/gradient/state length mismatch: {len(params)}, "
            f"{len(grads)}, {len(state.m)}"
        )
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            where = labels[i] if labels is not None else f"tensor {i}"
            raise TrainingError(f"non-finite gradient in {where}")
    state.t += 1
    t = state.t
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params, state
