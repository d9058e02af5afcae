"""Timing comparison of the numba and numpy kernel backends.

Runs forward+backward over the standard CNN feature stack at a given batch
size on each available backend and reports per-step time. Useful for picking
a backend on a new machine; the numba path usually wins once compiled.
"""

import time

import numpy as np

from .adam import AdamState, adam_step
from .backend import available_backends, set_backend
from .layers import Conv2d, Dense, Flatten, MaxPool2x2, Relu, Sequential, mse_loss


def _build(rows, cols, seed=0):
    rng = np.random.Generator(np.random.PCG64(seed))
    h, w = rows, cols
    for _ in range(3):
        h, w = (h - 2) // 2, (w - 2) // 2
    net = Sequential(
        [
            Conv2d(1, 32, rng), Relu(), MaxPool2x2(),
            Conv2d(32, 32, rng), Relu(), MaxPool2x2(),
            Conv2d(32, 64, rng), Relu(), MaxPool2x2(),
            Flatten(), Dense(h * w * 64, 64, rng), Relu(), Dense(64, 1, rng), Relu(),
        ]
    )
    net.build((rows, cols, 1))
    return net


def run_benchmark(batch=64, iters=10, rows=40, cols=64, out=print):
    """Time one training step per backend; returns {backend: seconds_per_step}."""
    rng = np.random.Generator(np.random.PCG64(1))
    x = rng.uniform(0.0, 1.0, (batch, rows, cols, 1))
    target = rng.uniform(0.2, 0.4, (batch, 1))
    results = {}
    out(f"training-step benchmark: batch {batch}, image {rows}x{cols}, {iters} iters")
    for name in available_backends():
        set_backend(name)
        net = _build(rows, cols)
        params = [p for _, _, p in net.parameters()]
        state = AdamState.for_params(params)

        def step():
            pred = net.forward(x)
            _, grad = mse_loss(pred, target)
            net.backward(grad)
            adam_step(params, [g for _, _, g in net.gradients()], state)

        step()  # warm caches and, for numba, trigger compilation
        t0 = time.perf_counter()
        for _ in range(iters):
            step()
        per_step = (time.perf_counter() - t0) / iters
        results[name] = per_step
        out(f"  {name:>6}: {per_step * 1e3:8.1f} ms/step")
    if len(results) == 2:
        ratio = results["numpy"] / results["numba"]
        out(f"  speedup numba vs numpy: {ratio:.2f}x")
    return results
