"""Pure-numpy kernel cores.

All cores receive pre-padded inputs from attnpipe.kernels; padding geometry
lives in one place there so both backends share it. einsum runs with
optimize=True so the contractions hit BLAS.
"""

import numpy as np


def fir_convolve_same(x, taps):
    return np.convolve(x, taps, mode="same")


def conv1d_fwd(xp, w, b, dilation, length):
    _, _, k = w.shape
    y = np.empty((xp.shape[0], w.shape[0], length), dtype=xp.dtype)
    y[:] = b[None, :, None]
    for j in range(k):
        start = (k - 1 - j) * dilation
        y += np.einsum(
            "oc,bcl->bol", w[:, :, j], xp[:, :, start : start + length], optimize=True
        )
    return y


def conv1d_bwd_input(dyp, w, dilation, shift, length):
    _, _, k = w.shape
    dx = np.zeros((dyp.shape[0], w.shape[1], length), dtype=dyp.dtype)
    for j in range(k):
        start = shift + j * dilation
        dx += np.einsum(
            "oc,bol->bcl", w[:, :, j], dyp[:, :, start : start + length], optimize=True
        )
    return dx


def conv1d_bwd_weight(xp, dy, k, dilation):
    length = dy.shape[2]
    dw = np.empty((dy.shape[1], xp.shape[1], k), dtype=dy.dtype)
    for j in range(k):
        start = (k - 1 - j) * dilation
        dw[:, :, j] = np.einsum(
            "bol,bcl->oc", dy, xp[:, :, start : start + length], optimize=True
        )
    return dw


def conv3d_fwd(xp, w, b, out_shape):
    t, h, wd = out_shape
    _, _, kt, kh, kw = w.shape
    y = np.empty((xp.shape[0], w.shape[0], t, h, wd), dtype=xp.dtype)
    y[:] = b[None, :, None, None, None]
    for a in range(kt):
        for bb in range(kh):
            for c in range(kw):
                y += np.einsum(
                    "oc,bcthw->bothw",
                    w[:, :, a, bb, c],
                    xp[:, :, a : a + t, bb : bb + h, c : c + wd],
                    optimize=True,
                )
    return y


def conv3d_bwd_input(dyp, w, out_shape):
    t, h, wd = out_shape
    _, _, kt, kh, kw = w.shape
    dx = np.zeros((dyp.shape[0], w.shape[1], t, h, wd), dtype=dyp.dtype)
    for a in range(kt):
        for bb in range(kh):
            for c in range(kw):
                dx += np.einsum(
                    "oc,bothw->bcthw",
                    w[:, :, a, bb, c],
                    dyp[
                        :,
                        :,
                        kt - 1 - a : kt - 1 - a + t,
                        kh - 1 - bb : kh - 1 - bb + h,
                        kw - 1 - c : kw - 1 - c + wd,
                    ],
                    optimize=True,
                )
    return dx


def conv3d_bwd_weight(xp, dy, kshape):
    kt, kh, kw = kshape
    _, _, t, h, wd = dy.shape
    dw = np.empty((dy.shape[1], xp.shape[1], kt, kh, kw), dtype=dy.dtype)
    for a in range(kt):
        for bb in range(kh):
            for c in range(kw):
                dw[:, :, a, bb, c] = np.einsum(
                    "bothw,bcthw->oc",
                    dy,
                    xp[:, :, a : a + t, bb : bb + h, c : c + wd],
                    optimize=True,
                )
    return dw


def conv2d_fwd(xp, w, b, out_shape):
    h, wd = out_shape
    _, _, kh, kw = w.shape
    y = np.empty((xp.shape[0], w.shape[0], h, wd), dtype=xp.dtype)
    y[:] = b[None, :, None, None]
    for bb in range(kh):
        for c in range(kw):
            y += np.einsum(
                "oc,bchw->bohw",
                w[:, :, bb, c],
                xp[:, :, bb : bb + h, c : c + wd],
                optimize=True,
            )
    return y


def conv2d_bwd_input(dyp, w, out_shape):
    h, wd = out_shape
    _, _, kh, kw = w.shape
    dx = np.zeros((dyp.shape[0], w.shape[1], h, wd), dtype=dyp.dtype)
    for bb in range(kh):
        for c in range(kw):
            dx += np.einsum(
                "oc,bohw->bchw",
                w[:, :, bb, c],
                dyp[:, :, kh - 1 - bb : kh - 1 - bb + h, kw - 1 - c : kw - 1 - c + wd],
                optimize=True,
            )
    return dx


def conv2d_bwd_weight(xp, dy, kshape):
    kh, kw = kshape
    _, _, h, wd = dy.shape
    dw = np.empty((dy.shape[1], xp.shape[1], kh, kw), dtype=dy.dtype)
    for bb in range(kh):
        for c in range(kw):
            dw[:, :, bb, c] = np.einsum(
                "bohw,bchw->oc", dy, xp[:, :, bb : bb + h, c : c + wd], optimize=True
            )
    return dw
