"""Numba @njit kernel cores.

Same contracts as _kernels_numpy; inputs arrive pre-padded. No fastmath and
no cross-iteration reductions, so results are deterministic run to run.

Loop order puts the contiguous (time / width) axis innermost with a scalar
weight hoisted out, so LLVM can vectorize each pass.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def fir_convolve_same(x, taps):
    n = x.shape[0]
    k = taps.shape[0]
    half = k // 2
    y = np.zeros(n, dtype=x.dtype)
    # y[i] = sum_j taps[j] * x[i + half - j], zero outside bounds
    for j in range(k):
        tv = taps[j]
        lo = max(0, j - half)
        hi = min(n - 1, n - 1 + j - half)
        for i in range(lo, hi + 1):
            y[i] += tv * x[i + half - j]
    return y


@njit(cache=True)
def conv1d_fwd(xp, w, b, dilation, length):
    nb = xp.shape[0]
    co, ci, k = w.shape
    y = np.empty((nb, co, length), dtype=xp.dtype)
    for bi in range(nb):
        for o in range(co):
            y[bi, o, :] = b[o]
            for c in range(ci):
                for j in range(k):
                    wv = w[o, c, j]
                    off = (k - 1 - j) * dilation
                    for t in range(length):
                        y[bi, o, t] += wv * xp[bi, c, t + off]
    return y


@njit(cache=True)
def conv1d_bwd_input(dyp, w, dilation, shift, length):
    nb = dyp.shape[0]
    co, ci, k = w.shape
    dx = np.zeros((nb, ci, length), dtype=dyp.dtype)
    for bi in range(nb):
        for c in range(ci):
            for o in range(co):
                for j in range(k):
                    wv = w[o, c, j]
                    off = shift + j * dilation
                    for t in range(length):
                        dx[bi, c, t] += wv * dyp[bi, o, t + off]
    return dx


@njit(cache=True)
def conv1d_bwd_weight(xp, dy, k, dilation):
    nb, co, length = dy.shape
    ci = xp.shape[1]
    dw = np.zeros((co, ci, k), dtype=dy.dtype)
    for o in range(co):
        for c in range(ci):
            for j in range(k):
                off = (k - 1 - j) * dilation
                acc = 0.0
                for bi in range(nb):
                    for t in range(length):
                        acc += dy[bi, o, t] * xp[bi, c, t + off]
                dw[o, c, j] = acc
    return dw


@njit(cache=True)
def conv3d_fwd(xp, w, b, out_shape):
    t, h, wd = out_shape
    nb = xp.shape[0]
    co, ci, kt, kh, kw = w.shape
    y = np.empty((nb, co, t, h, wd), dtype=xp.dtype)
    for bi in range(nb):
        for o in range(co):
            y[bi, o, :, :, :] = b[o]
            for c in range(ci):
                for a in range(kt):
                    for bb in range(kh):
                        for cc in range(kw):
                            wv = w[o, c, a, bb, cc]
                            for it in range(t):
                                for ih in range(h):
                                    for iw in range(wd):
                                        y[bi, o, it, ih, iw] += (
                                            wv * xp[bi, c, it + a, ih + bb, iw + cc]
                                        )
    return y


@njit(cache=True)
def conv3d_bwd_input(dyp, w, out_shape):
    t, h, wd = out_shape
    nb = dyp.shape[0]
    co, ci, kt, kh, kw = w.shape
    dx = np.zeros((nb, ci, t, h, wd), dtype=dyp.dtype)
    for bi in range(nb):
        for c in range(ci):
            for o in range(co):
                for a in range(kt):
                    for bb in range(kh):
                        for cc in range(kw):
                            wv = w[o, c, a, bb, cc]
                            for it in range(t):
                                for ih in range(h):
                                    for iw in range(wd):
                                        dx[bi, c, it, ih, iw] += wv * dyp[
                                            bi,
                                            o,
                                            it + kt - 1 - a,
                                            ih + kh - 1 - bb,
                                            iw + kw - 1 - cc,
                                        ]
    return dx


@njit(cache=True)
def conv3d_bwd_weight(xp, dy, kshape):
    kt, kh, kw = kshape
    nb, co, t, h, wd = dy.shape
    ci = xp.shape[1]
    dw = np.zeros((co, ci, kt, kh, kw), dtype=dy.dtype)
    for o in range(co):
        for c in range(ci):
            for a in range(kt):
                for bb in range(kh):
                    for cc in range(kw):
                        acc = 0.0
                        for bi in range(nb):
                            for it in range(t):
                                for ih in range(h):
                                    for iw in range(wd):
                                        acc += (
                                            dy[bi, o, it, ih, iw]
                                            * xp[bi, c, it + a, ih + bb, iw + cc]
                                        )
                        dw[o, c, a, bb, cc] = acc
    return dw


@njit(cache=True)
def conv2d_fwd(xp, w, b, out_shape):
    h, wd = out_shape
    nb = xp.shape[0]
    co, ci, kh, kw = w.shape
    y = np.empty((nb, co, h, wd), dtype=xp.dtype)
    for bi in range(nb):
        for o in range(co):
            y[bi, o, :, :] = b[o]
            for c in range(ci):
                for bb in range(kh):
                    for cc in range(kw):
                        wv = w[o, c, bb, cc]
                        for ih in range(h):
                            for iw in range(wd):
                                y[bi, o, ih, iw] += wv * xp[bi, c, ih + bb, iw + cc]
    return y


@njit(cache=True)
def conv2d_bwd_input(dyp, w, out_shape):
    h, wd = out_shape
    nb = dyp.shape[0]
    co, ci, kh, kw = w.shape
    dx = np.zeros((nb, ci, h, wd), dtype=dyp.dtype)
    for bi in range(nb):
        for c in range(ci):
            for o in range(co):
                for bb in range(kh):
                    for cc in range(kw):
                        wv = w[o, c, bb, cc]
                        for ih in range(h):
                            for iw in range(wd):
                                dx[bi, c, ih, iw] += (
                                    wv * dyp[bi, o, ih + kh - 1 - bb, iw + kw - 1 - cc]
                                )
    return dx


@njit(cache=True)
def conv2d_bwd_weight(xp, dy, kshape):
    kh, kw = kshape
    nb, co, h, wd = dy.shape
    ci = xp.shape[1]
    dw = np.zeros((co, ci, kh, kw), dtype=dy.dtype)
    for o in range(co):
        for c in range(ci):
            for bb in range(kh):
                for cc in range(kw):
                    acc = 0.0
                    for bi in range(nb):
                        for ih in range(h):
                            for iw in range(wd):
                                acc += dy[bi, o, ih, iw] * xp[bi, c, ih + bb, iw + cc]
                    dw[o, c, bb, cc] = acc
    return dw
