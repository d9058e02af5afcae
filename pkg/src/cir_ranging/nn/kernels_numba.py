"""Numba-jitted compute kernels: conv2d and 2x2 max-pool, forward and backward.

Convolution runs as im2col + one BLAS GEMM. The im2col/col2im loops exploit
the channels-last layout: for each kernel row offset, the three horizontal
taps of a patch are one contiguous 3*Cin run in both the input and the column
matrix, so the copies vectorize.

Large intermediates (column matrices, outputs, scatter targets) live in the
per-layer cache dict and are reused across steps; on a training loop this
removes most allocation and page-fault cost. Returned arrays are therefore
only valid until the same layer runs again.
"""

import numpy as np
from numba import njit


def _buf(cache, key, shape, dtype=np.float64):
    arr = cache.get(key)
    if arr is None or arr.shape != shape or arr.dtype != dtype:
        arr = np.empty(shape, dtype=dtype)
        cache[key] = arr
    return arr


@njit(cache=True, fastmath=True)
def _im2col(x, cols, ho, wo):
    n, h, w, cin = x.shape
    run = 3 * cin  # one kernel row of a patch, contiguous in x and cols
    for nn in range(n):
        for i in range(ho):
            base = (nn * ho + i) * wo
            for di in range(3):
                src = x[nn, i + di].ravel()
                dst_off = di * run
                for j in range(wo):
                    r = base + j
                    s = j * cin
                    for k in range(run):
                        cols[r, dst_off + k] = src[s + k]


@njit(cache=True, fastmath=True)
def _col2im_add(gcols, dx, ho, wo):
    n, h, w, cin = dx.shape
    run = 3 * cin
    for nn in range(n):
        for i in range(ho):
            base = (nn * ho + i) * wo
            for di in range(3):
                dst = dx[nn, i + di].ravel()
                src_off = di * run
                for j in range(wo):
                    r = base + j
                    s = j * cin
                    for k in range(run):
                        dst[s + k] += gcols[r, src_off + k]


@njit(cache=True, fastmath=True)
def _maxpool_fwd(x, y, idx):
    n, h, w, c = x.shape
    ho = h // 2
    wo = w // 2
    for nn in range(n):
        for i in range(ho):
            for j in range(wo):
                for k in range(c):
                    best = x[nn, 2 * i, 2 * j, k]
                    bi = 0
                    v = x[nn, 2 * i, 2 * j + 1, k]
                    if v > best:
                        best = v
                        bi = 1
                    v = x[nn, 2 * i + 1, 2 * j, k]
                    if v > best:
                        best = v
                        bi = 2
                    v = x[nn, 2 * i + 1, 2 * j + 1, k]
                    if v > best:
                        best = v
                        bi = 3
                    y[nn, i, j, k] = best
                    idx[nn, i, j, k] = bi


@njit(cache=True, fastmath=True)
def _maxpool_bwd(g, idx, dx):
    n, ho, wo, c = g.shape
    for nn in range(n):
        for i in range(ho):
            for j in range(wo):
                for k in range(c):
                    b = idx[nn, i, j, k]
                    dx[nn, 2 * i + b // 2, 2 * j + b % 2, k] += g[nn, i, j, k]


def conv2d_forward(x, w, cache):
    """Valid 3x3 cross-correlation via im2col + GEMM, no bias."""
    n, h, wid, cin = x.shape
    ho, wo = h - 2, wid - 2
    cout = w.shape[3]
    rows = n * ho * wo
    cols = _buf(cache, "cols", (rows, 9 * cin))
    _im2col(x, cols, ho, wo)
    y = _buf(cache, "y", (rows, cout))
    np.matmul(cols, w.reshape(9 * cin, cout), out=y)
    return y.reshape(n, ho, wo, cout)


def conv2d_backward(x, g, w, cache, need_dx, dw_out=None):
    """Gradients of conv2d_forward, reusing the forward call's column matrix."""
    n, h, wid, cin = x.shape
    ho, wo = g.shape[1], g.shape[2]
    cout = g.shape[3]
    g2 = g.reshape(-1, cout)
    cols = cache["cols"]
    dw = dw_out if dw_out is not None else np.empty_like(w)
    np.matmul(cols.T, g2, out=dw.reshape(9 * cin, cout))
    dx = None
    if need_dx:
        gcols = _buf(cache, "gcols", (g2.shape[0], 9 * cin))
        np.matmul(g2, w.reshape(9 * cin, cout).T, out=gcols)
        dx = _buf(cache, "dx", x.shape)
        dx.fill(0.0)
        _col2im_add(gcols, dx, ho, wo)
    return dx, dw


def maxpool_forward(x, cache):
    """2x2/stride-2 max pool; idx records the row-major first-max position."""
    n, h, w, c = x.shape
    ho, wo = h // 2, w // 2
    y = _buf(cache, "py", (n, ho, wo, c))
    idx = _buf(cache, "pidx", (n, ho, wo, c), dtype=np.uint8)
    _maxpool_fwd(x, y, idx)
    return y, idx


def maxpool_backward(g, idx, in_h, in_w, cache):
    n = g.shape[0]
    c = g.shape[3]
    dx = _buf(cache, "pdx", (n, in_h, in_w, c))
    dx.fill(0.0)
    _maxpool_bwd(g, idx, dx)
    return dx
