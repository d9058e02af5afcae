import numpy as np
import pytest

from cir_ranging.nn import backend


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Run one tiny batch through every available backend before timing anything.

    The jitted kernels compile on first call (disk-cached, but still not free);
    tests that assert runtime budgets must not pay that cost.
    """
    x = np.random.default_rng(0).standard_normal((2, 6, 6, 3))
    w = np.random.default_rng(1).standard_normal((3, 3, 3, 4))
    g = np.ones((2, 4, 4, 4))
    for name in backend.available_backends():
        backend.set_backend(name)
        mod = backend.get_backend()
        cache = {}
        y = mod.conv2d_forward(x, w, cache)
        mod.conv2d_backward(x, g, w, cache, True)
        py, idx = mod.maxpool_forward(y, {})
        mod.maxpool_backward(np.ones_like(py), idx, 4, 4, {})
    backend.set_backend("numba" if "numba" in backend.available_backends() else "numpy")
    yield
