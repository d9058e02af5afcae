"""Finite-difference oracle for the analytic backward passes.

Compares backpropagated gradients of the full-model MSE against central
differences on a sampled subset of parameter entries. Everything runs in
double precision, so agreement to 1e-5 relative error is expected; a wrong
backward pass shows up orders of magnitude above that.
"""

import numpy as np

from .layers import Sequential, mse_loss


def model_loss(model: Sequential, x, target) -> float:
    loss, _ = mse_loss(model.forward(x), target)
    return loss


def collect_gradients(model: Sequential, x, target):
    """Run forward + backward once; returns gradient arrays in parameter order."""
    pred = model.forward(x)
    _, g = mse_loss(pred, target)
    model.backward(g)
    return [grad.copy() for _, _, grad in model.gradients()]


def sample_parameter_indices(model: Sequential, n: int, seed: int = 0):
    """Deterministic sample of n (tensor_index, flat_index) pairs, no repeats."""
    sizes = [p.size for _, _, p in model.parameters()]
    total = int(np.sum(sizes))
    rng = np.random.Generator(np.random.PCG64(seed))
    flat = rng.choice(total, size=min(n, total), replace=False)
    bounds = np.cumsum(sizes)
    out = []
    for f in sorted(int(v) for v in flat):
        ti = int(np.searchsorted(bounds, f, side="right"))
        prev = 0 if ti == 0 else int(bounds[ti - 1])
        out.append((ti, f - prev))
    return out


def gradient_check(
    model: Sequential,
    x,
    target,
    n_samples: int = 200,
    seed: int = 0,
    h: float = 1e-6,
    analytic=None,
    indices=None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    relative error = |a - n| / max(|a| + |n|, 1e-8), over a random subset of
    at least n_samples parameter entries (or the given indices). Passing
    analytic lets a caller check externally supplied gradient tensors against
    the same finite-difference oracle.
    """
    if analytic is None:
        analytic = collect_gradients(model, x, target)
    if indices is None:
        indices = sample_parameter_indices(model, n_samples, seed)
    params = [p for _, _, p in model.parameters()]
    worst = 0.0
    for ti, fi in indices:
        p = params[ti].reshape(-1)
        orig = p[fi]
        p[fi] = orig + h
        loss_plus = model_loss(model, x, target)
        p[fi] = orig - h
        loss_minus = model_loss(model, x, target)
        p[fi] = orig
        numeric = (loss_plus - loss_minus) / (2.0 * h)
        a = float(analytic[ti].reshape(-1)[fi])
        rel = abs(a - numeric) / max(abs(a) + abs(numeric), 1e-8)
        worst = max(worst, rel)
    return worst
