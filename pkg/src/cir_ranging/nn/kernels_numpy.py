"""Pure-numpy compute kernels: conv2d and 2x2 max-pool, forward and backward.

Convolution is expressed as nine shifted GEMMs (one per kernel offset), which
keeps everything inside BLAS at the cost of strided-slice copies. Used as the
fallback when numba is unavailable or explicitly deselected. Signatures match
the numba backend; the cache dict holds reusable scratch buffers, so returned
arrays are only valid until the same layer runs again.
"""

import numpy as np


def _buf(cache, key, shape, dtype=np.float64):
    arr = cache.get(key)
    if arr is None or arr.shape != shape or arr.dtype != dtype:
        arr = np.empty(shape, dtype=dtype)
        cache[key] = arr
    return arr


def conv2d_forward(x, w, cache):
    """Valid 3x3 cross-correlation, stride 1, channels last, no bias.

    x [N,H,W,Cin], w [3,3,Cin,Cout] -> y [N,H-2,W-2,Cout].
    """
    n, h, wid, cin = x.shape
    ho, wo = h - 2, wid - 2
    cout = w.shape[3]
    y = _buf(cache, "y", (n * ho * wo, cout))
    y.fill(0.0)
    for di in range(3):
        for dj in range(3):
            xs = np.ascontiguousarray(x[:, di : di + ho, dj : dj + wo, :]).reshape(-1, cin)
            y += xs @ w[di, dj]
    return y.reshape(n, ho, wo, cout)


def conv2d_backward(x, g, w, cache, need_dx, dw_out=None):
    """Gradients of conv2d_forward: (dx or None, dw)."""
    n, h, wid, cin = x.shape
    ho, wo = g.shape[1], g.shape[2]
    cout = g.shape[3]
    g2 = g.reshape(-1, cout)
    dw = dw_out if dw_out is not None else np.empty_like(w)
    for di in range(3):
        for dj in range(3):
            xs = np.ascontiguousarray(x[:, di : di + ho, dj : dj + wo, :]).reshape(-1, cin)
            np.matmul(xs.T, g2, out=dw[di, dj])
    dx = None
    if need_dx:
        dx = _buf(cache, "dx", x.shape)
        dx.fill(0.0)
        for di in range(3):
            for dj in range(3):
                dx[:, di : di + ho, dj : dj + wo, :] += (g2 @ w[di, dj].T).reshape(
                    n, ho, wo, cin
                )
    return dx, dw


def maxpool_forward(x, cache):
    """2x2 max pool, stride 2, trailing odd row/column dropped.

    Returns (y, idx) with idx in {0..3} encoding the in-window argmax position
    in row-major order (first max wins on ties).
    """
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    windows = (
        x[:, : 2 * ho, : 2 * wo, :]
        .reshape(n, ho, 2, wo, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(n, ho, wo, 4, c)
    )
    idx = np.argmax(windows, axis=3).astype(np.uint8)
    y = np.max(windows, axis=3)
    return y, idx


def maxpool_backward(g, idx, in_h, in_w, cache):
    """Route each upstream gradient to its recorded argmax position."""
    n, ho, wo, c = g.shape
    dx = _buf(cache, "pdx", (n, in_h, in_w, c))
    dx.fill(0.0)
    rows = 2 * np.arange(ho)[None, :, None, None] + (idx >> 1)
    cols = 2 * np.arange(wo)[None, None, :, None] + (idx & 1)
    nn = np.arange(n)[:, None, None, None]
    cc = np.arange(c)[None, None, None, :]
    dx[nn, rows, cols, cc] = g  # windows are disjoint, so plain assignment
    return dx
