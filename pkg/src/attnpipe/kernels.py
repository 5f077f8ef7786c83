"""Convolution kernels shared by the DSP and network modules.

Public functions pad here and dispatch to the backend cores selected by
ATTNPIPE_BACKEND (see attnpipe.backend). Shapes follow the (batch, channel,
...) convention; all floats are 64-bit.
"""

import numpy as np

from .backend import HAS_NUMBA

if HAS_NUMBA:
    from . import _kernels_numba as _core
else:
    from . import _kernels_numpy as _core


def fir_convolve_same(x, taps):
    """Zero-phase 'same' convolution of a 1D signal with symmetric odd taps."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    taps = np.ascontiguousarray(taps, dtype=np.float64)
    return _core.fir_convolve_same(x, taps)


def _pad_left(x, pad):
    if pad == 0:
        return x
    b, c, length = x.shape
    out = np.zeros((b, c, length + pad), dtype=x.dtype)
    out[:, :, pad:] = x
    return out


def _pad_right(x, pad):
    if pad == 0:
        return x
    b, c, length = x.shape
    out = np.zeros((b, c, length + pad), dtype=x.dtype)
    out[:, :, :length] = x
    return out


def conv1d_causal(x, w, b, dilation, shift):
    """Dilated causal 1D convolution.

    y[t] = b + sum_j w[:, :, j] @ x[:, :, t - shift - j*dilation]

    shift=0 is conventional causal (output at t sees input at t); shift=1
    excludes input[t] from output[t].
    """
    k = w.shape[2]
    length = x.shape[2]
    pad = (k - 1) * dilation + shift
    xp = _pad_left(np.ascontiguousarray(x, dtype=np.float64), pad)
    return _core.conv1d_fwd(xp, np.ascontiguousarray(w), np.ascontiguousarray(b), dilation, length)


def conv1d_causal_backward(x, w, dy, dilation, shift):
    """Gradients of conv1d_causal w.r.t. input, weight, and bias."""
    k = w.shape[2]
    length = x.shape[2]
    pad = (k - 1) * dilation + shift
    xp = _pad_left(np.ascontiguousarray(x, dtype=np.float64), pad)
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    dyp = _pad_right(dy, pad)
    dx = _core.conv1d_bwd_input(dyp, np.ascontiguousarray(w), dilation, shift, length)
    dw = _core.conv1d_bwd_weight(xp, dy, k, dilation)
    db = dy.sum(axis=(0, 2))
    return dx, dw, db


def _pad_same_nd(x, half):
    pads = [(0, 0), (0, 0)] + [(h, h) for h in half]
    return np.pad(x, pads)


def conv3d_same(x, w, b):
    """3D convolution over (T, H, W), zero 'same' padding, odd kernel."""
    kt, kh, kw = w.shape[2:]
    xp = _pad_same_nd(
        np.ascontiguousarray(x, dtype=np.float64),
        ((kt - 1) // 2, (kh - 1) // 2, (kw - 1) // 2),
    )
    xp = np.ascontiguousarray(xp)
    return _core.conv3d_fwd(xp, np.ascontiguousarray(w), np.ascontiguousarray(b), x.shape[2:])


def conv3d_same_backward(x, w, dy):
    kt, kh, kw = w.shape[2:]
    half = ((kt - 1) // 2, (kh - 1) // 2, (kw - 1) // 2)
    xp = np.ascontiguousarray(_pad_same_nd(np.ascontiguousarray(x, dtype=np.float64), half))
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    dyp = np.ascontiguousarray(_pad_same_nd(dy, half))
    dx = _core.conv3d_bwd_input(dyp, np.ascontiguousarray(w), x.shape[2:])
    dw = _core.conv3d_bwd_weight(xp, dy, (kt, kh, kw))
    db = dy.sum(axis=(0, 2, 3, 4))
    return dx, dw, db


def conv2d_same(x, w, b):
    """2D convolution over (H, W), zero 'same' padding, odd kernel."""
    kh, kw = w.shape[2:]
    xp = np.ascontiguousarray(
        _pad_same_nd(np.ascontiguousarray(x, dtype=np.float64), ((kh - 1) // 2, (kw - 1) // 2))
    )
    return _core.conv2d_fwd(xp, np.ascontiguousarray(w), np.ascontiguousarray(b), x.shape[2:])


def conv2d_same_backward(x, w, dy):
    kh, kw = w.shape[2:]
    half = ((kh - 1) // 2, (kw - 1) // 2)
    xp = np.ascontiguousarray(_pad_same_nd(np.ascontiguousarray(x, dtype=np.float64), half))
    dy = np.ascontiguousarray(dy, dtype=np.float64)
    dyp = np.ascontiguousarray(_pad_same_nd(dy, half))
    dx = _core.conv2d_bwd_input(dyp, np.ascontiguousarray(w), x.shape[2:])
    dw = _core.conv2d_bwd_weight(xp, dy, (kh, kw))
    db = dy.sum(axis=(0, 2, 3))
    return dx, dw, db
