import numpy as np
import pytest

from cir_ranging.errors import ConfigError, ShapeError, TrainingError
from cir_ranging.nn import (
    AdamState,
    Conv2d,
    Dense,
    Flatten,
    MaxPool2x2,
    Relu,
    Sequential,
    adam_step,
    backend,
    collect_gradients,
    gradient_check,
    load_checkpoint,
    mse_loss,
    save_checkpoint,
)

RNG = np.random.default_rng(0)


def _both_backends():
    return backend.available_backends()


# ---------------------------------------------------------------- conv / pool


def test_conv_zero_weights_outputs_bias():
    conv = Conv2d(2, 3)
    conv.b[:] = np.array([1.0, -2.0, 0.5])
    x = RNG.standard_normal((4, 5, 6, 2))
    y = conv.forward(x)
    assert y.shape == (4, 3, 4, 3)
    for c, b in enumerate(conv.b):
        np.testing.assert_array_equal(y[..., c], b)


def test_conv_one_hot_kernel_shifts():
    # a single 1 at the kernel's top-left selects the input's bottom-right window
    conv = Conv2d(1, 1)
    conv.w[0, 0, 0, 0] = 1.0
    x = RNG.standard_normal((1, 5, 7, 1))
    y = conv.forward(x)
    np.testing.assert_array_equal(y[0, :, :, 0], x[0, :3, :5, 0])


def test_conv_matches_direct_triple_loop():
    x = RNG.standard_normal((2, 6, 5, 3))
    conv = Conv2d(3, 4, np.random.default_rng(1))
    y = conv.forward(x)
    ref = np.zeros_like(y)
    for i in range(4):
        for j in range(3):
            for di in range(3):
                for dj in range(3):
                    ref[:, i, j, :] += x[:, i + di, j + dj, :] @ conv.w[di, dj]
    ref += conv.b
    np.testing.assert_allclose(y, ref, atol=1e-12)


def test_backends_agree_on_conv_and_pool():
    if len(_both_backends()) < 2:
        pytest.skip("only one backend available")
    x = RNG.standard_normal((3, 8, 9, 2))
    w = RNG.standard_normal((3, 3, 2, 5))
    g = RNG.standard_normal((3, 6, 7, 5))
    results = {}
    for name in _both_backends():
        backend.set_backend(name)
        mod = backend.get_backend()
        cache = {}
        y = mod.conv2d_forward(x, w, cache).copy()
        dx, dw = mod.conv2d_backward(x, g, w, cache, True)
        py, idx = mod.maxpool_forward(y, {})
        pdx = mod.maxpool_backward(np.ones_like(py), idx, y.shape[1], y.shape[2], {})
        results[name] = (y, dx.copy(), dw.copy(), py.copy(), idx.copy(), pdx.copy())
    backend.set_backend("numba")
    a, b = (results[n] for n in _both_backends())
    for got, want in zip(a, b):
        np.testing.assert_allclose(got, want, atol=1e-12)


def test_pool_hand_case():
    pool = MaxPool2x2()
    x = np.array([[1.0, 2.0, 5.0, 0.0], [3.0, 4.0, -1.0, 2.0]]).reshape(1, 2, 4, 1)
    y = pool.forward(x)
    np.testing.assert_array_equal(y.reshape(-1), [4.0, 5.0])
    g = pool.backward(np.array([[[[10.0], [20.0]]]]))
    expected = np.zeros_like(x)
    expected[0, 1, 1, 0] = 10.0
    expected[0, 0, 2, 0] = 20.0
    np.testing.assert_array_equal(g, expected)


def test_pool_tie_breaks_first_in_row_major_order():
    x = np.ones((1, 2, 2, 1))
    for name in _both_backends():
        backend.set_backend(name)
        pool = MaxPool2x2()
        y = pool.forward(x)
        g = pool.backward(np.ones_like(y))
        assert g[0, 0, 0, 0] == 1.0, name
        assert g.sum() == 1.0, name
    backend.set_backend("numba" if "numba" in _both_backends() else "numpy")


def test_pool_floor_semantics_drop_odd_edges():
    pool = MaxPool2x2()
    y = pool.forward(RNG.standard_normal((1, 5, 7, 2)))
    assert y.shape == (1, 2, 3, 2)


# ---------------------------------------------------------- dense / relu / mse


def test_dense_affine_hand_case():
    d = Dense(2, 2)
    d.w[:] = [[1.0, 2.0], [3.0, 4.0]]
    d.b[:] = [10.0, 20.0]
    y = d.forward(np.array([[1.0, 1.0]]))
    np.testing.assert_array_equal(y, [[14.0, 26.0]])


def test_dense_backward_shapes_and_values():
    d = Dense(3, 2)
    d.w[:] = RNG.standard_normal((3, 2))
    x = RNG.standard_normal((5, 3))
    d.forward(x)
    g = RNG.standard_normal((5, 2))
    dx = d.backward(g)
    np.testing.assert_allclose(dx, g @ d.w.T, atol=1e-13)
    np.testing.assert_allclose(d.dw, x.T @ g, atol=1e-13)
    np.testing.assert_allclose(d.db, g.sum(axis=0), atol=1e-13)


def test_relu_subgradient_zero_at_zero():
    r = Relu()
    x = np.array([[-1.0, 0.0, 2.0]])
    np.testing.assert_array_equal(r.forward(x), [[0.0, 0.0, 2.0]])
    np.testing.assert_array_equal(r.backward(np.ones_like(x)), [[0.0, 0.0, 1.0]])


def test_mse_hand_case():
    loss, grad = mse_loss(np.array([[1.0], [2.0]]), np.array([[0.0], [0.0]]))
    assert loss == 2.5
    np.testing.assert_array_equal(grad, [[1.0], [2.0]])


# --------------------------------------------------------------- sequential


def _tiny_cnn(rows=8, cols=8):
    rng = np.random.default_rng(7)
    net = Sequential(
        [Conv2d(1, 4, rng), Relu(), MaxPool2x2(), Flatten(), Dense(4 * 3 * 3, 2, rng)]
    )
    net.build((rows, cols, 1))
    return net


def test_sequential_build_reports_layer_on_mismatch():
    net = Sequential([Conv2d(1, 4), Flatten(), Dense(99, 2)])
    with pytest.raises(ShapeError, match="layer 2"):
        net.build((8, 8, 1))


def test_sequential_rejects_undersized_input():
    net = Sequential([Conv2d(1, 4), MaxPool2x2(), Conv2d(4, 4)])
    with pytest.raises(ShapeError):
        net.build((3, 3, 1))


def test_sequential_forward_checks_input_shape():
    net = _tiny_cnn()
    with pytest.raises(ShapeError):
        net.forward(np.zeros((2, 9, 8, 1)))


def test_forward_twice_reuses_buffers_safely():
    # layer outputs are scratch, valid until the next call; results must not
    # depend on what a previous batch left behind
    net = _tiny_cnn()
    x1 = RNG.standard_normal((3, 8, 8, 1))
    x2 = RNG.standard_normal((3, 8, 8, 1))
    net.forward(x1)
    second = net.forward(x2).copy()
    fresh = _tiny_cnn().forward(x2)
    np.testing.assert_allclose(second, fresh, atol=1e-14)


def test_parameter_iteration_order_is_stable():
    net = _tiny_cnn()
    names = [(i, name) for i, name, _ in net.parameters()]
    assert names == [(0, "w"), (0, "b"), (4, "w"), (4, "b")]


# ---------------------------------------------------------------- gradients


def test_gradcheck_tiny_linear_is_tight():
    """Float-noise floor check: O(1) loss with all-O(1) gradients puts the
    central-difference error well below 1e-9."""
    rng = np.random.default_rng(2)
    net = Sequential([Dense(2, 2, rng), Dense(2, 1, rng)])
    net.build((2,))
    x = rng.uniform(0.8, 1.2, size=(6, 2))
    target = net.forward(x) - 1.0
    assert gradient_check(net, x, target.copy(), n_samples=9, seed=0) < 1e-9


def test_gradcheck_full_small_cnn():
    rng = np.random.default_rng(3)
    net = Sequential(
        [Conv2d(1, 3, rng), Relu(), MaxPool2x2(), Flatten(), Dense(3 * 3 * 3, 1, rng)]
    )
    net.build((8, 8, 1))
    x = rng.standard_normal((4, 8, 8, 1))
    target = rng.standard_normal((4, 1))
    assert gradient_check(net, x, target, n_samples=60, seed=1) < 1e-5


def test_gradcheck_detects_injected_bug():
    rng = np.random.default_rng(4)
    net = Sequential([Dense(3, 4, rng), Relu(), Dense(4, 1, rng)])
    net.build((3,))
    x = rng.standard_normal((8, 3))
    target = rng.standard_normal((8, 1))
    bad = collect_gradients(net, x, target)
    bad[0] = bad[0] * 1.1  # 10% error in the first weight tensor
    err = gradient_check(net, x, target, n_samples=40, seed=2, analytic=bad)
    assert err > 0.04


# --------------------------------------------------------------------- adam


def _scalar_adam_reference(x0, grad_fn, steps, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Textbook Adam on one scalar, in plain Python floats."""
    x, m, v = x0, 0.0, 0.0
    for t in range(1, steps + 1):
        g = grad_fn(x)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        x -= lr * mhat / (np.sqrt(vhat) + eps)
    return x


def test_adam_matches_scalar_reference():
    # quadratic (x - 3)^2 from x0 = 0; engine and reference use identical math
    grad_fn = lambda x: 2.0 * (x - 3.0)
    p = [np.array([0.0])]
    state = AdamState.for_params(p)
    for _ in range(100):
        adam_step(p, [np.array([grad_fn(p[0][0])])], state)
    expected = _scalar_adam_reference(0.0, grad_fn, 100)
    assert abs(p[0][0] - expected) < 1e-12
    assert state.t == 100


def test_adam_flat_vs_partitioned_equivalence():
    # element-wise updates: one 4-vector and four scalars follow identical paths
    vals = np.array([1.0, -2.0, 0.5, 3.0])
    grads = np.array([0.3, -0.7, 1.1, 0.05])
    flat = [vals.copy()]
    parts = [np.array([v]) for v in vals]
    st_flat = AdamState.for_params(flat)
    st_parts = AdamState.for_params(parts)
    for _ in range(25):
        adam_step(flat, [grads], st_flat, lr=0.01)
        adam_step(parts, [np.array([g]) for g in grads], st_parts, lr=0.01)
    np.testing.assert_array_equal(flat[0], np.concatenate(parts))


def test_adam_first_step_is_signed_lr():
    p = [np.array([5.0])]
    state = AdamState.for_params(p)
    adam_step(p, [np.array([0.4])], state, lr=1e-3)
    np.testing.assert_allclose(p[0][0], 5.0 - 1e-3, rtol=1e-6)


def test_adam_rejects_non_finite_gradient():
    p = [np.zeros(3)]
    state = AdamState.for_params(p)
    with pytest.raises(TrainingError, match="non-finite"):
        adam_step(p, [np.array([1.0, np.inf, 0.0])], state)


def test_adam_length_mismatch():
    p = [np.zeros(3)]
    with pytest.raises(ValueError):
        adam_step(p, [], AdamState.for_params(p))


# --------------------------------------------------------------- checkpoints


def test_checkpoint_roundtrip(tmp_path):
    net = _tiny_cnn()
    params = [p for _, _, p in net.parameters()]
    state = AdamState.for_params(params)
    state.t = 17
    for m in state.m:
        m += 0.25
    meta = {"kind": 1, "range_scale": 300.0, "input_shape": (8, 8), "rssi_mean": 0.0, "rssi_std": 1.0}
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, net, state, meta)
    loaded, lstate, lmeta = load_checkpoint(path)
    got = [(i, n, p.copy()) for i, n, p in loaded.parameters()]
    want = [(i, n, p) for i, n, p in net.parameters()]
    assert [g[:2] for g in got] == [w[:2] for w in want]
    for (_, _, gp), (_, _, wp) in zip(got, want):
        np.testing.assert_array_equal(gp, wp)
    assert lstate.t == 17
    for gm, wm in zip(lstate.m, state.m):
        np.testing.assert_array_equal(gm, wm)
    assert lmeta == meta


def test_checkpoint_without_optional_sections(tmp_path):
    net = Sequential([Dense(2, 2)])
    path = tmp_path / "bare.ckpt"
    save_checkpoint(path, net)
    _, state, meta = load_checkpoint(path)
    assert state is None and meta is None


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_rejects_truncation(tmp_path):
    net = _tiny_cnn()
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, net)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) // 2])
    with pytest.raises(ValueError):
        load_checkpoint(path)


# ----------------------------------------------------------------- backends


def test_backend_selection_and_errors():
    assert backend.backend_name() in ("numba", "numpy")
    with pytest.raises(ConfigError, match="unknown backend"):
        backend.set_backend("cuda")
    backend.set_backend("numpy")
    assert backend.backend_name() == "numpy"
    backend.set_backend("numba" if "numba" in backend.available_backends() else "numpy")
