"""Pure-numpy kernel implementations.

Fallback backend used when numba is unavailable or disabled via the
``HAIRLINE_NO_NUMBA`` environment flag. Array-shaped contracts are
identical to the numba backend; see ``hairline.kernels``.

Dense kernels (conv, pool, resize) are vectorized. Component labeling
is inherently sequential and runs as a Python union-find over the
foreground pixels only, which is acceptable for sparse masks.
"""

import numpy as np

BACKEND = "numpy"


def conv2d_forward(xp, w, b, stride):
    """Correlate padded input (C,Hp,Wp) with w (O,C,k,k); returns (O,OH,OW)."""
    c, hp, wp = xp.shape
    o, _, k, _ = w.shape
    oh = (hp - k) // stride + 1
    ow = (wp - k) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(1, 2))
    win = win[:, ::stride, ::stride]  # (C, OH, OW, k, k)
    cols = win.transpose(1, 2, 0, 3, 4).reshape(oh * ow, c * k * k)
    out = cols @ w.reshape(o, c * k * k).T + b
    return np.ascontiguousarray(out.reshape(oh, ow, o).transpose(2, 0, 1))


def conv2d_backward_input(w, dout, stride, hp, wp):
    """Gradient w.r.t. the padded conv input; returns (C,Hp,Wp)."""
    o, c, k, _ = w.shape
    _, oh, ow = dout.shape
    dxp = np.zeros((c, hp, wp), dtype=np.float64)
    for ky in range(k):
        for kx in range(k):
            patch = np.einsum("oc,oyx->cyx", w[:, :, ky, kx], dout)
            dxp[:, ky:ky + stride * oh:stride, kx:kx + stride * ow:stride] += patch
    return dxp


def conv2d_backward_params(xp, dout, stride, k):
    """Gradients w.r.t. conv weights and bias: ((O,C,k,k), (O,))."""
    c, hp, wp = xp.shape
    o, oh, ow = dout.shape
    dw = np.empty((o, c, k, k), dtype=np.float64)
    for ky in range(k):
        for kx in range(k):
            view = xp[:, ky:ky + stride * oh:stride, kx:kx + stride * ow:stride]
            dw[:, :, ky, kx] = np.einsum("oyx,cyx->oc", dout, view)
    db = dout.sum(axis=(1, 2))
    return dw, db


def maxpool_forward(x, k, stride):
    """Max pool (C,H,W) -> (out (C,OH,OW), argmax flat H*W indices)."""
    c, h, w = x.shape
    oh = (h - k) // stride + 1
    ow = (w - k) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(1, 2))
    win = win[:, ::stride, ::stride].reshape(c, oh, ow, k * k)
    flat_in_win = win.argmax(axis=3)  # first max wins, row-major in window
    out = np.take_along_axis(win, flat_in_win[..., None], axis=3)[..., 0]
    oy = np.arange(oh)[None, :, None]
    ox = np.arange(ow)[None, None, :]
    src_y = oy * stride + flat_in_win // k
    src_x = ox * stride + flat_in_win % k
    arg = (src_y * w + src_x).astype(np.int64)
    return np.ascontiguousarray(out), arg


def maxpool_backward(dout, arg, h, w):
    """Scatter upstream gradients back through the pool argmax."""
    c = dout.shape[0]
    dx = np.zeros((c, h * w), dtype=np.float64)
    for ch in range(c):
        np.add.at(dx[ch], arg[ch].ravel(), dout[ch].ravel())
    return dx.reshape(c, h, w)


def bilinear_resize(src, oh, ow):
    """Bilinear resample (h,w) -> (oh,ow) using half-pixel centers."""
    h, w = src.shape
    sy = np.clip((np.arange(oh) + 0.5) * h / oh - 0.5, 0.0, h - 1.0)
    sx = np.clip((np.arange(ow) + 0.5) * w / ow - 0.5, 0.0, w - 1.0)
    y0 = sy.astype(np.int64)
    x0 = sx.astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None]
    fx = (sx - x0)[None, :]
    top = src[np.ix_(y0, x0)] * (1 - fx) + src[np.ix_(y0, x1)] * fx
    bot = src[np.ix_(y1, x0)] * (1 - fx) + src[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def label_components(mask):
    """8-connected component labeling of a boolean/uint8 mask.

    Returns (labels int32 (H,W), count). Components are numbered 1..count
    in raster-scan discovery order.
    """
    h, w = mask.shape
    fg = mask.astype(bool)
    labels = np.zeros((h, w), dtype=np.int32)
    coords = np.argwhere(fg)
    n = len(coords)
    if n == 0:
        return labels, 0
    index = np.full((h, w), -1, dtype=np.int64)
    index[coords[:, 0], coords[:, 1]] = np.arange(n)
    parent = np.arange(n, dtype=np.int64)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    ys, xs = coords[:, 0], coords[:, 1]
    for dy, dx in ((0, -1), (-1, -1), (-1, 0), (-1, 1)):
        ny, nx = ys + dy, xs + dx
        ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        ok[ok] = fg[ny[ok], nx[ok]]
        for i, j in zip(np.nonzero(ok)[0], index[ny[ok], nx[ok]]):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)

    roots = np.array([find(i) for i in range(n)], dtype=np.int64)
    # compact ids in raster discovery order (coords are already raster-ordered)
    remap = {}
    compact = np.empty(n, dtype=np.int32)
    for i, r in enumerate(roots):
        if r not in remap:
            remap[r] = len(remap) + 1
        compact[i] = remap[r]
    labels[ys, xs] = compact
    return labels, len(remap)
