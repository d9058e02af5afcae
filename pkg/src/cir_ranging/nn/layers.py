"""Layer stack: conv2d, 2x2 max-pool, flatten, dense, ReLU, and MSE loss.

All tensors are double precision, channels last ([N, H, W, C] for images,
[N, D] for vectors). Forward passes cache what backward needs; backward
consumes the most recent forward. Shape compatibility is checked once at
model build time, never per step.

Layers reuse internal scratch buffers between calls, so an activation or
gradient array returned by a layer is only valid until that layer runs again;
callers that retain results across steps must copy them.
"""

import numpy as np

from ..errors import ShapeError
from .backend import get_backend


def _kaiming_uniform(shape, fan_in, rng):
    # ReLU-appropriate fan-in scaling: U(-sqrt(6/fan_in), +sqrt(6/fan_in))
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Conv2d:
    """Valid 3x3 convolution (cross-correlation), stride 1, plus bias."""

    kernel = 3

    def __init__(self, in_channels: int, out_channels: int, rng=None):
        self.in_channels = in_channels
        self.out_channels = out_channels
        fan_in = self.kernel * self.kernel * in_channels
        shape = (self.kernel, self.kernel, in_channels, out_channels)
        self.w = _kaiming_uniform(shape, fan_in, rng) if rng is not None else np.zeros(shape)
        self.b = np.zeros(out_channels)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self.need_input_grad = True  # Sequential clears this on the first layer
        self._cache = {}
        self._x = None

    def out_shape(self, in_shape):
        if len(in_shape) != 3:
            raise ShapeError(f"conv2d expects [H, W, C] input, got {in_shape}")
        h, w, c = in_shape
        if c != self.in_channels:
            raise ShapeError(f"conv2d expects {self.in_channels} input channels, got {c}")
        if h < self.kernel or w < self.kernel:
            raise ShapeError(f"conv2d input {h}x{w} smaller than {self.kernel}x{self.kernel} kernel")
        return (h - 2, w - 2, self.out_channels)

    def forward(self, x):
        self._x = x
        y = get_backend().conv2d_forward(x, self.w, self._cache)
        y += self.b  # backend output is this layer's scratch buffer
        return y

    def backward(self, g):
        g = np.ascontiguousarray(g)
        self.db = g.sum(axis=(0, 1, 2))
        dx, _ = get_backend().conv2d_backward(
            self._x, g, self.w, self._cache, self.need_input_grad, dw_out=self.dw
        )
        return dx

    def param_items(self):
        return [("w", self.w), ("b", self.b)]

    def grad_items(self):
        return [("w", self.dw), ("b", self.db)]


class MaxPool2x2:
    """2x2 max pool, stride 2; trailing odd row/column dropped."""

    def __init__(self):
        self._idx = None
        self._in_hw = None
        self._cache = {}

    def out_shape(self, in_shape):
        if len(in_shape) != 3:
            raise ShapeError(f"max-pool expects [H, W, C] input, got {in_shape}")
        h, w, c = in_shape
        if h < 2 or w < 2:
            raise ShapeError(f"max-pool input {h}x{w} smaller than its 2x2 window")
        return (h // 2, w // 2, c)

    def forward(self, x):
        self._in_hw = (x.shape[1], x.shape[2])
        y, self._idx = get_backend().maxpool_forward(x, self._cache)
        return y

    def backward(self, g):
        g = np.ascontiguousarray(g)
        return get_backend().maxpool_backward(g, self._idx, *self._in_hw, self._cache)

    def param_items(self):
        return []

    def grad_items(self):
        return []


class Flatten:
    def __init__(self):
        self._in_shape = None

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x):
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, g):
        return g.reshape(self._in_shape)

    def param_items(self):
        return []

    def grad_items(self):
        return []


class Dense:
    """Affine map y = x @ w + b with w of shape [fan_in, units]."""

    def __init__(self, fan_in: int, units: int, rng=None):
        self.fan_in = fan_in
        self.units = units
        self.w = _kaiming_uniform((fan_in, units), fan_in, rng) if rng is not None else np.zeros((fan_in, units))
        self.b = np.zeros(units)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self.need_input_grad = True
        self._x = None

    def out_shape(self, in_shape):
        if len(in_shape) != 1:
            raise ShapeError(f"dense expects flat [D] input, got {in_shape}")
        if in_shape[0] != self.fan_in:
            raise ShapeError(f"dense expects {self.fan_in} inputs, got {in_shape[0]}")
        return (self.units,)

    def forward(self, x):
        self._x = x
        return x @ self.w + self.b

    def backward(self, g):
        self.dw = self._x.T @ g
        self.db = g.sum(axis=0)
        if not self.need_input_grad:
            return None
        return g @ self.w.T

    def param_items(self):
        return [("w", self.w), ("b", self.b)]

    def grad_items(self):
        return [("w", self.dw), ("b", self.db)]


class Relu:
    """Elementwise max(0, x); subgradient at exactly 0 is 0."""

    def __init__(self):
        self._mask = None
        self._out = None
        self._gout = None

    def out_shape(self, in_shape):
        return in_shape

    def forward(self, x):
        if self._out is None or self._out.shape != x.shape:
            self._out = np.empty_like(x)
            self._gout = np.empty_like(x)
            self._mask = np.empty(x.shape, dtype=bool)
        np.greater(x, 0, out=self._mask)
        np.multiply(x, self._mask, out=self._out)
        return self._out

    def backward(self, g):
        np.multiply(g, self._mask, out=self._gout)
        return self._gout

    def param_items(self):
        return []

    def grad_items(self):
        return []


class Sequential:
    """Ordered layer stack with build-time shape validation."""

    def __init__(self, layers):
        self.layers = list(layers)
        self.input_shape = None
        self.output_shape = None

    def build(self, input_shape):
        """Compose shapes through the stack; any mismatch raises here, not at step time."""
        shape = tuple(int(d) for d in input_shape)
        self.input_shape = shape
        for i, layer in enumerate(self.layers):
            try:
                shape = layer.out_shape(shape)
            except ShapeError as e:
                raise ShapeError(f"layer {i} ({type(layer).__name__}): {e}") from None
            if any(d < 1 for d in shape):
                raise ShapeError(
                    f"layer {i} ({type(layer).__name__}) output shape {shape} has a "
                    "non-positive dimension"
                )
        self.output_shape = shape
        for layer in self.layers:
            if hasattr(layer, "need_input_grad"):
                layer.need_input_grad = True
        if self.layers and hasattr(self.layers[0], "need_input_grad"):
            self.layers[0].need_input_grad = False  # nothing upstream wants dx
        return self

    def forward(self, x):
        if self.input_shape is not None and tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(
                f"input shape {tuple(x.shape[1:])} does not match model input "
                f"{self.input_shape}"
            )
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, g):
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def parameters(self):
        """Yield (layer_index, name, array) over all parameter tensors in order."""
        for i, layer in enumerate(self.layers):
            for name, p in layer.param_items():
                yield i, name, p

    def gradients(self):
        for i, layer in enumerate(self.layers):
            for name, g in layer.grad_items():
                yield i, name, g

    def n_parameters(self) -> int:
        return sum(p.size for _, _, p in self.parameters())


def mse_loss(pred, target):
    """Mean over the batch of squared error; returns (loss, dloss/dpred)."""
    if pred.shape != target.shape:
        raise ShapeError(f"mse shapes differ: pred {pred.shape}, target {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return loss, grad
