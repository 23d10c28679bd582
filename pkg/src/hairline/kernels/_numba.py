"""Numba-jitted kernel implementations.

Default backend for the hot inner loops: tile convolution forward and
backward, max pooling, bilinear heatmap resampling, and connected
component labeling. All kernels are single-threaded scalar loops so
results are bit-stable regardless of worker/thread configuration;
``cache=True`` amortizes JIT cost across CLI invocations.
"""

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True, fastmath=True)
def conv2d_forward(xp, w, b, stride):
    c, hp, wp = xp.shape
    o, _, k, _ = w.shape
    oh = (hp - k) // stride + 1
    ow = (wp - k) // stride + 1
    out = np.empty((o, oh, ow), dtype=np.float64)
    for oc in range(o):
        for y in range(oh):
            ys = y * stride
            for x in range(ow):
                xs = x * stride
                acc = b[oc]
                for ic in range(c):
                    for ky in range(k):
                        for kx in range(k):
                            acc += w[oc, ic, ky, kx] * xp[ic, ys + ky, xs + kx]
                out[oc, y, x] = acc
    return out


@njit(cache=True, fastmath=True)
def conv2d_backward_input(w, dout, stride, hp, wp):
    o, c, k, _ = w.shape
    _, oh, ow = dout.shape
    dxp = np.zeros((c, hp, wp), dtype=np.float64)
    for oc in range(o):
        for y in range(oh):
            ys = y * stride
            for x in range(ow):
                xs = x * stride
                g = dout[oc, y, x]
                for ic in range(c):
                    for ky in range(k):
                        for kx in range(k):
                            dxp[ic, ys + ky, xs + kx] += w[oc, ic, ky, kx] * g
    return dxp


@njit(cache=True, fastmath=True)
def conv2d_backward_params(xp, dout, stride, k):
    c, hp, wp = xp.shape
    o, oh, ow = dout.shape
    dw = np.zeros((o, c, k, k), dtype=np.float64)
    db = np.zeros(o, dtype=np.float64)
    for oc in range(o):
        for y in range(oh):
            ys = y * stride
            for x in range(ow):
                xs = x * stride
                g = dout[oc, y, x]
                db[oc] += g
                for ic in range(c):
                    for ky in range(k):
                        for kx in range(k):
                            dw[oc, ic, ky, kx] += g * xp[ic, ys + ky, xs + kx]
    return dw, db


@njit(cache=True)
def maxpool_forward(x, k, stride):
    c, h, w = x.shape
    oh = (h - k) // stride + 1
    ow = (w - k) // stride + 1
    out = np.empty((c, oh, ow), dtype=np.float64)
    arg = np.empty((c, oh, ow), dtype=np.int64)
    for ch in range(c):
        for y in range(oh):
            ys = y * stride
            for xo in range(ow):
                xs = xo * stride
                best = x[ch, ys, xs]
                bi = ys * w + xs
                for ky in range(k):
                    for kx in range(k):
                        v = x[ch, ys + ky, xs + kx]
                        if v > best:  # strict: first max in window wins
                            best = v
                            bi = (ys + ky) * w + (xs + kx)
                out[ch, y, xo] = best
                arg[ch, y, xo] = bi
    return out, arg


@njit(cache=True)
def maxpool_backward(dout, arg, h, w):
    c, oh, ow = dout.shape
    dx = np.zeros((c, h, w), dtype=np.float64)
    for ch in range(c):
        for y in range(oh):
            for x in range(ow):
                idx = arg[ch, y, x]
                dx[ch, idx // w, idx % w] += dout[ch, y, x]
    return dx


@njit(cache=True, fastmath=True)
def bilinear_resize(src, oh, ow):
    h, w = src.shape
    out = np.empty((oh, ow), dtype=np.float64)
    for y in range(oh):
        sy = (y + 0.5) * h / oh - 0.5
        if sy < 0.0:
            sy = 0.0
        if sy > h - 1.0:
            sy = h - 1.0
        y0 = int(sy)
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for x in range(ow):
            sx = (x + 0.5) * w / ow - 0.5
            if sx < 0.0:
                sx = 0.0
            if sx > w - 1.0:
                sx = w - 1.0
            x0 = int(sx)
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            top = src[y0, x0] * (1.0 - fx) + src[y0, x1] * fx
            bot = src[y1, x0] * (1.0 - fx) + src[y1, x1] * fx
            out[y, x] = top * (1.0 - fy) + bot * fy
    return out


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def _label_components(fg):
    h, w = fg.shape
    labels = np.zeros((h, w), dtype=np.int32)
    max_labels = h * w // 2 + 2
    parent = np.arange(max_labels, dtype=np.int64)
    nprov = 0
    # pass 1: provisional labels, union with the four already-seen neighbors
    for y in range(h):
        for x in range(w):
            if fg[y, x] == 0:
                continue
            best = 0
            for dy, dx in ((0, -1), (-1, -1), (-1, 0), (-1, 1)):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] > 0:
                    if best == 0 or labels[ny, nx] < best:
                        best = labels[ny, nx]
            if best == 0:
                nprov += 1
                labels[y, x] = nprov
            else:
                labels[y, x] = best
                for dy, dx in ((0, -1), (-1, -1), (-1, 0), (-1, 1)):
                    ny, nx = y + dy, x + dx
                    if 0 <= ny < h and 0 <= nx < w and labels[ny, nx] > 0:
                        ra = _find(parent, best)
                        rb = _find(parent, labels[ny, nx])
                        if ra != rb:
                            parent[max(ra, rb)] = min(ra, rb)
    # pass 2: compact root ids in raster discovery order
    remap = np.zeros(nprov + 1, dtype=np.int32)
    count = 0
    for y in range(h):
        for x in range(w):
            if labels[y, x] > 0:
                r = _find(parent, labels[y, x])
                if remap[r] == 0:
                    count += 1
                    remap[r] = count
                labels[y, x] = remap[r]
    return labels, count


def label_components(mask):
    """8-connected labeling; components numbered in raster discovery order."""
    return _label_components(np.ascontiguousarray(mask, dtype=np.uint8))
