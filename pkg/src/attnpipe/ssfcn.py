"""3D-encoder / 2D-decoder fully convolutional network mapping a short video
clip to a per-frame saliency map, at desk scale.

Encoder: five blocks of [conv3d 3x3x3, norm, ReLU] x2 + max-pool 1x2x2, so
time is preserved while H and W halve per block. A temporal mean (max as an
option) collapses T at the bottleneck. Decoder: five blocks of [nearest 2x
upsample, conv2d 3x3, norm, ReLU] with a within-block residual through a 1x1
projection. A 1x1 sigmoid head yields the H x W map in [0, 1].

Normalization is per-channel over all remaining axes, computed from the
current tensor (batch-free at desk scale), with learnable scale/shift.

Block counts are configurable so miniature configs can be gradient-checked;
the production configuration is the fixed five/five.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidSpecError
from .kernels import conv2d_same, conv2d_same_backward, conv3d_same, conv3d_same_backward

_NORM_EPS = 1e-5


@dataclass(frozen=True)
class SsfcnConfig:
    clip_len: int = 8
    encoder_channels: tuple = (8, 16, 32, 64, 64)
    in_channels: int = 3
    seed: int = 0
    learning_rate: float = 0.02
    momentum: float = 0.9
    temporal_pool: str = "mean"  # or "max"
    separable: bool = False  # factorize 3x3x3 into spatial 1x3x3 + temporal 3x1x1

    def __post_init__(self):
        if self.clip_len < 1:
            raise InvalidSpecError("clip_len must be >= 1")
        if len(self.encoder_channels) < 1:
            raise InvalidSpecError("need at least one encoder block")
        if self.in_channels not in (1, 3):
            raise InvalidSpecError("in_channels must be 1 or 3")
        if self.temporal_pool not in ("mean", "max"):
            raise InvalidSpecError("temporal_pool must be mean or max")


@dataclass(frozen=True)
class VideoClip:
    frames: np.ndarray  # T x H x W x C in [0, 1]
    frame_rate_fps: float = 10.0
    clip_start_ms: int = 0

    def __post_init__(self):
        object.__setattr__(self, "frames", np.asarray(self.frames, dtype=np.float64))
        f = self.frames
        if f.ndim != 4:
            raise InvalidSpecError("frames must be T x H x W x C")
        if f.shape[0] < 1 or f.shape[3] not in (1, 3):
            raise InvalidSpecError("need T >= 1 and C in {1, 3}")
        if f.min() < 0.0 or f.max() > 1.0:
            raise InvalidSpecError("frame values must be in [0, 1]")


def num_blocks(config: SsfcnConfig) -> int:
    return len(config.encoder_channels)


def _decoder_channels(config: SsfcnConfig):
    rev = tuple(reversed(config.encoder_channels))
    outs = []
    for i in range(len(rev)):
        outs.append(rev[i + 1] if i + 1 < len(rev) else config.encoder_channels[0])
    return outs


def param_shapes(config: SsfcnConfig):
    shapes = []
    cin = config.in_channels
    for i, c in enumerate(config.encoder_channels):
        for j, ci in ((1, cin), (2, c)):
            if config.separable:
                shapes.append((f"enc{i}.w{j}s", (c, ci, 1, 3, 3)))
                shapes.append((f"enc{i}.w{j}t", (c, c, 3, 1, 1)))
            else:
                shapes.append((f"enc{i}.w{j}", (c, ci, 3, 3, 3)))
            shapes.append((f"enc{i}.b{j}", (c,)))
            shapes.append((f"enc{i}.g{j}", (c,)))
            shapes.append((f"enc{i}.beta{j}", (c,)))
        cin = c
    for i, cout in enumerate(_decoder_channels(config)):
        shapes.append((f"dec{i}.w", (cout, cin, 3, 3)))
        shapes.append((f"dec{i}.b", (cout,)))
        shapes.append((f"dec{i}.g", (cout,)))
        shapes.append((f"dec{i}.beta", (cout,)))
        if cout != cin:
            shapes.append((f"dec{i}.proj", (cout, cin, 1, 1)))
        cin = cout
    shapes.append(("head.w", (1, cin, 1, 1)))
    shapes.append(("head.b", (1,)))
    return shapes


def init_params(config: SsfcnConfig) -> dict:
    rng = np.random.default_rng(config.seed)
    params = {}
    for name, shape in param_shapes(config):
        leaf = name.rsplit(".", 1)[1]
        if leaf.startswith("w") or leaf == "proj":
            ksize = int(np.prod(shape[2:])) if len(shape) > 2 else 1
            limit = np.sqrt(6.0 / ((shape[1] + shape[0]) * ksize))
            params[name] = rng.uniform(-limit, limit, size=shape)
        elif leaf.startswith("g"):
            params[name] = np.ones(shape)
        else:
            params[name] = np.zeros(shape)
    return params


def _norm_fwd(x, g, beta):
    axes = (0,) + tuple(range(2, x.ndim))
    mu = x.mean(axis=axes, keepdims=True)
    var = x.var(axis=axes, keepdims=True)
    inv = 1.0 / np.sqrt(var + _NORM_EPS)
    xhat = (x - mu) * inv
    gb = g.reshape((1, -1) + (1,) * (x.ndim - 2))
    bb = beta.reshape(gb.shape)
    return gb * xhat + bb, (xhat, inv, axes)


def _norm_bwd(dy, g, cache):
    xhat, inv, axes = cache
    gb = g.reshape((1, -1) + (1,) * (dy.ndim - 2))
    dxhat = dy * gb
    m1 = dxhat.mean(axis=axes, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=axes, keepdims=True)
    dx = inv * (dxhat - m1 - xhat * m2)
    dg = (dy * xhat).sum(axis=axes).ravel()
    dbeta = dy.sum(axis=axes).ravel()
    return dx, dg, dbeta


def _maxpool_hw_fwd(x):
    b, c, t, h, w = x.shape
    r = x.reshape(b, c, t, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 3, 5, 4, 6)
    flat = r.reshape(b, c, t, h // 2, w // 2, 4)
    idx = flat.argmax(axis=-1)  # first max on ties: deterministic
    y = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]
    return y, idx


def _maxpool_hw_bwd(dy, idx, in_shape):
    b, c, t, h, w = in_shape
    flat = np.zeros((b, c, t, h // 2, w // 2, 4), dtype=dy.dtype)
    np.put_along_axis(flat, idx[..., None], dy[..., None], axis=-1)
    r = flat.reshape(b, c, t, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 3, 5, 4, 6)
    return r.reshape(b, c, t, h, w)


def _upsample2_fwd(x):
    return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _upsample2_bwd(dy):
    b, c, h, w = dy.shape
    return dy.reshape(b, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


def _enc_conv_fwd(params, pre, j, x, separable):
    if separable:
        ys = conv3d_same(x, params[f"{pre}.w{j}s"], np.zeros(params[f"{pre}.w{j}s"].shape[0]))
        y = conv3d_same(ys, params[f"{pre}.w{j}t"], params[f"{pre}.b{j}"])
        return y, ys
    return conv3d_same(x, params[f"{pre}.w{j}"], params[f"{pre}.b{j}"]), None


def _enc_conv_bwd(params, grads, pre, j, x, ys, dy, separable):
    if separable:
        dys, dwt, db = conv3d_same_backward(ys, params[f"{pre}.w{j}t"], dy)
        dx, dws, dbs = conv3d_same_backward(x, params[f"{pre}.w{j}s"], dys)
        grads[f"{pre}.w{j}t"] = dwt
        grads[f"{pre}.w{j}s"] = dws
        grads[f"{pre}.b{j}"] = db
        return dx
    dx, dw, db = conv3d_same_backward(x, params[f"{pre}.w{j}"], dy)
    grads[f"{pre}.w{j}"] = dw
    grads[f"{pre}.b{j}"] = db
    return dx


def forward(params: dict, clip_tensor: np.ndarray, config: SsfcnConfig):
    """Map (B, C, T, H, W) in [0,1] to a (B, H, W) saliency map in (0, 1).

    Returns (maps, cache). H and W must be divisible by 2**num_blocks;
    T must equal config.clip_len.
    """
    x = np.ascontiguousarray(clip_tensor, dtype=np.float64)
    if x.ndim != 5:
        raise InvalidArgumentError("clip tensor must be (B, C, T, H, W)")
    nb = num_blocks(config)
    b, c, t, h, w = x.shape
    if c != config.in_channels:
        raise InvalidArgumentError(f"expected {config.in_channels} input channels, got {c}")
    if t != config.clip_len:
        raise InvalidArgumentError(f"expected clip length {config.clip_len}, got {t}")
    if h % (2 ** nb) or w % (2 ** nb):
        raise InvalidArgumentError(f"H and W must be divisible by {2 ** nb}")
    cache = {"enc": [], "dec": []}
    for i in range(nb):
        pre = f"enc{i}"
        blk = {"in": x}
        z1, blk["sep1"] = _enc_conv_fwd(params, pre, 1, x, config.separable)
        n1, blk["norm1"] = _norm_fwd(z1, params[f"{pre}.g1"], params[f"{pre}.beta1"])
        a1 = np.maximum(n1, 0.0)
        blk["relu1"] = n1 > 0
        blk["a1"] = a1
        z2, blk["sep2"] = _enc_conv_fwd(params, pre, 2, a1, config.separable)
        n2, blk["norm2"] = _norm_fwd(z2, params[f"{pre}.g2"], params[f"{pre}.beta2"])
        a2 = np.maximum(n2, 0.0)
        blk["relu2"] = n2 > 0
        blk["pool_in_shape"] = a2.shape
        x, blk["pool_idx"] = _maxpool_hw_fwd(a2)
        cache["enc"].append(blk)
    cache["bridge_in_shape"] = x.shape
    if config.temporal_pool == "mean":
        y = x.mean(axis=2)
    else:
        cache["bridge_idx"] = x.argmax(axis=2)
        y = np.take_along_axis(x, cache["bridge_idx"][:, :, None], axis=2)[:, :, 0]
    for i in range(nb):
        pre = f"dec{i}"
        blk = {"in": y}
        up = _upsample2_fwd(y)
        blk["up"] = up
        z = conv2d_same(up, params[f"{pre}.w"], params[f"{pre}.b"])
        n, blk["norm"] = _norm_fwd(z, params[f"{pre}.g"], params[f"{pre}.beta"])
        a = np.maximum(n, 0.0)
        blk["relu"] = n > 0
        if f"{pre}.proj" in params:
            res = conv2d_same(up, params[f"{pre}.proj"], np.zeros(params[f"{pre}.w"].shape[0]))
        else:
            res = up
        y = a + res
        cache["dec"].append(blk)
    cache["head_in"] = y
    logits = conv2d_same(y, params["head.w"], params["head.b"])[:, 0]
    maps = _sigmoid(logits)
    cache["maps"] = maps
    return maps, cache


def bce_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean per-pixel binary cross-entropy."""
    eps = 1e-12
    p = np.clip(pred, eps, 1.0 - eps)
    return float(-(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)).mean())


def loss_and_grads(params: dict, clip_tensor: np.ndarray, target: np.ndarray,
                   config: SsfcnConfig):
    """BCE loss against a (B, H, W) target density and full parameter gradients."""
    target = np.asarray(target, dtype=np.float64)
    if target.ndim == 2:
        target = target[None]
    maps, cache = forward(params, clip_tensor, config)
    if maps.shape != target.shape:
        raise InvalidArgumentError(f"target shape {target.shape} != output {maps.shape}")
    loss = bce_loss(maps, target)
    grads = {}
    dlogits = ((maps - target) / target.size)[:, None]
    y = cache["head_in"]
    dy, dw, db = conv2d_same_backward(y, params["head.w"], dlogits)
    grads["head.w"], grads["head.b"] = dw, db
    nb = num_blocks(config)
    for i in reversed(range(nb)):
        pre = f"dec{i}"
        blk = cache["dec"][i]
        da = dy
        dn = da * blk["relu"]
        dz, dg, dbeta = _norm_bwd(dn, params[f"{pre}.g"], blk["norm"])
        grads[f"{pre}.g"], grads[f"{pre}.beta"] = dg, dbeta
        dup, dw, db = conv2d_same_backward(blk["up"], params[f"{pre}.w"], dz)
        grads[f"{pre}.w"], grads[f"{pre}.b"] = dw, db
        if f"{pre}.proj" in params:
            dup2, dproj, _ = conv2d_same_backward(blk["up"], params[f"{pre}.proj"], dy)
            grads[f"{pre}.proj"] = dproj
            dup += dup2
        else:
            dup += dy
        dy = _upsample2_bwd(dup)
    # back through the temporal bridge
    bshape = cache["bridge_in_shape"]
    if config.temporal_pool == "mean":
        dx = np.broadcast_to(dy[:, :, None] / bshape[2], bshape).copy()
    else:
        dx = np.zeros(bshape)
        np.put_along_axis(dx, cache["bridge_idx"][:, :, None], dy[:, :, None], axis=2)
    for i in reversed(range(nb)):
        pre = f"enc{i}"
        blk = cache["enc"][i]
        da2 = _maxpool_hw_bwd(dx, blk["pool_idx"], blk["pool_in_shape"])
        dn2 = da2 * blk["relu2"]
        dz2, dg2, dbeta2 = _norm_bwd(dn2, params[f"{pre}.g2"], blk["norm2"])
        grads[f"{pre}.g2"], grads[f"{pre}.beta2"] = dg2, dbeta2
        da1 = _enc_conv_bwd(params, grads, pre, 2, blk["a1"], blk["sep2"], dz2, config.separable)
        dn1 = da1 * blk["relu1"]
        dz1, dg1, dbeta1 = _norm_bwd(dn1, params[f"{pre}.g1"], blk["norm1"])
        grads[f"{pre}.g1"], grads[f"{pre}.beta1"] = dg1, dbeta1
        dx = _enc_conv_bwd(params, grads, pre, 1, blk["in"], blk["sep1"], dz1, config.separable)
    return loss, grads, maps


def clip_to_tensor(clip: VideoClip) -> np.ndarray:
    """T x H x W x C frames to a (1, C, T, H, W) network input."""
    return np.ascontiguousarray(clip.frames.transpose(3, 0, 1, 2))[None]


def ssfcn_forward(params: dict, clip: VideoClip, config: SsfcnConfig) -> np.ndarray:
    """Predicted H x W saliency map for one clip."""
    maps, _ = forward(params, clip_to_tensor(clip), config)
    return maps[0]


def ssfcn_train_step(params: dict, clip: VideoClip, target: np.ndarray,
                     config: SsfcnConfig, velocity: dict = None):
    """One momentum-GD step on the BCE loss for a single clip.

    Returns (params, velocity, loss). Pass the returned velocity back in to
    continue; None starts from rest.
    """
    loss, grads, _ = loss_and_grads(params, clip_to_tensor(clip), np.asarray(target), config)
    if velocity is None:
        velocity = {k: np.zeros_like(v) for k, v in params.items()}
    params = {k: v.copy() for k, v in params.items()}
    for k in params:
        velocity[k] = config.momentum * velocity[k] - config.learning_rate * grads[k]
        params[k] += velocity[k]
    return params, velocity, loss


def preprocess_clip(raw_frames, config: SsfcnConfig, frame_rate_fps: float = 10.0):
    """8-bit frames to clips: scale to [0,1], fit H and W to a multiple of 32
    (center crop when larger, zero-pad when smaller), then slide windows of
    clip_len with hop clip_len // 2."""
    from .errors import IngestError

    frames = [np.asarray(f) for f in raw_frames]
    if not frames:
        raise IngestError("no frames")
    shape = frames[0].shape
    if any(f.shape != shape for f in frames):
        raise IngestError("inconsistent frame dimensions")
    if len(frames) < config.clip_len:
        raise IngestError(f"need at least {config.clip_len} frames")
    arr = np.stack(frames).astype(np.float64) / 255.0
    if arr.ndim == 3:
        arr = arr[..., None]
    t, h, w, c = arr.shape
    out_h = max(32, (h // 32) * 32) if h >= 32 else 32
    out_w = max(32, (w // 32) * 32) if w >= 32 else 32
    fitted = np.zeros((t, out_h, out_w, c))
    src_h, src_w = min(h, out_h), min(w, out_w)
    sy, sx = (h - src_h) // 2, (w - src_w) // 2
    dy, dx = (out_h - src_h) // 2, (out_w - src_w) // 2
    fitted[:, dy : dy + src_h, dx : dx + src_w] = arr[:, sy : sy + src_h, sx : sx + src_w]
    hop = max(1, config.clip_len // 2)
    clips = []
    for start in range(0, t - config.clip_len + 1, hop):
        clips.append(
            VideoClip(
                frames=fitted[start : start + config.clip_len],
                frame_rate_fps=frame_rate_fps,
                clip_start_ms=round(start * 1000.0 / frame_rate_fps),
            )
        )
    return clips
