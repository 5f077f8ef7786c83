"""Dilated causal temporal convolutional network classifying hyper-filtered
PPG windows into drowsy (0) / wakeful (1).

12 residual blocks by default, each holding two dilated causal convolutions
with per-time-step channel normalization, ReLU, and seeded spatial dropout.
The dilation starts at 2 and grows per block (increment by default, doubling
as an option). The head is a global average over time, a linear layer, and a
2-way softmax; the score is the wakeful-class probability.

Strict causality (default) shifts the causal padding by one extra sample so
the activation at time t never sees input[t]; a config flag restores the
conventional (<= t) convolution.

Parameters live in a flat dict of float64 arrays keyed in declaration order,
which is also the checkpoint tensor order.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidArgumentError, InvalidDatasetError, InvalidSpecError
from .fusion import AttentionScore
from .kernels import conv1d_causal, conv1d_causal_backward

_NORM_EPS = 1e-5


@dataclass(frozen=True)
class TcnConfig:
    num_blocks: int = 12
    kernel_size: int = 3
    dilation_schedule: str = "increment"  # or "doubling"
    channels_per_block: int = 16
    dropout_rate: float = 0.1
    num_classes: int = 2
    input_channels: int = 22
    seed: int = 0
    strict_causal: bool = True

    def __post_init__(self):
        if self.num_blocks < 1:
            raise InvalidSpecError("num_blocks must be >= 1")
        if self.kernel_size < 2:
            raise InvalidSpecError("kernel_size must be >= 2")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidSpecError("dropout_rate must be in [0, 1)")
        if self.dilation_schedule not in ("increment", "doubling"):
            raise InvalidSpecError(f"unknown dilation schedule {self.dilation_schedule!r}")


def dilations(config: TcnConfig):
    if config.dilation_schedule == "increment":
        return [2 + i for i in range(config.num_blocks)]
    return [2 ** (i + 1) for i in range(config.num_blocks)]


def receptive_field(config: TcnConfig) -> int:
    """Number of input samples that can influence one output activation."""
    base = 1 + sum(2 * (config.kernel_size - 1) * d for d in dilations(config))
    if config.strict_causal:
        base += 2 * config.num_blocks  # one extra shift per conv layer
    return base


def param_shapes(config: TcnConfig):
    """Parameter names and shapes in declaration (checkpoint) order."""
    shapes = []
    c = config.channels_per_block
    k = config.kernel_size
    in_ch = config.input_channels
    for i in range(config.num_blocks):
        ci = in_ch if i == 0 else c
        shapes.append((f"block{i}.w1", (c, ci, k)))
        shapes.append((f"block{i}.b1", (c,)))
        shapes.append((f"block{i}.g1", (c,)))
        shapes.append((f"block{i}.beta1", (c,)))
        shapes.append((f"block{i}.w2", (c, c, k)))
        shapes.append((f"block{i}.b2", (c,)))
        shapes.append((f"block{i}.g2", (c,)))
        shapes.append((f"block{i}.beta2", (c,)))
        if ci != c:
            shapes.append((f"block{i}.proj", (c, ci)))
    shapes.append(("head.w", (config.num_classes, c)))
    shapes.append(("head.b", (config.num_classes,)))
    return shapes


def init_params(config: TcnConfig) -> dict:
    """Glorot-uniform conv weights, zero biases, identity normalization.

    The head weights start at zero so the initial logits are exactly equal:
    the residual stack accumulates activation magnitude over 12 blocks, and
    a randomly initialized head on top of that starts training from
    confidently wrong predictions instead of chance level."""
    rng = np.random.default_rng(config.seed)
    params = {}
    for name, shape in param_shapes(config):
        leaf = name.rsplit(".", 1)[1]
        if name == "head.w":
            params[name] = np.zeros(shape)
        elif leaf in ("w1", "w2", "proj", "w"):
            if len(shape) == 3:
                fan_in = shape[1] * shape[2]
                fan_out = shape[0] * shape[2]
            else:
                fan_in, fan_out = shape[1], shape[0]
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-limit, limit, size=shape)
        elif leaf in ("g1", "g2"):
            params[name] = np.ones(shape)
        else:
            params[name] = np.zeros(shape)
    return params


def _norm_forward(z, g, beta):
    # normalize across channels at each time step; causal-safe
    mu = z.mean(axis=1, keepdims=True)
    var = z.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + _NORM_EPS)
    xhat = (z - mu) * inv
    return g[None, :, None] * xhat + beta[None, :, None], (xhat, inv)


def _norm_backward(dy, g, cache):
    xhat, inv = cache
    dxhat = dy * g[None, :, None]
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
    dz = inv * (dxhat - m1 - xhat * m2)
    dg = (dy * xhat).sum(axis=(0, 2))
    dbeta = dy.sum(axis=(0, 2))
    return dz, dg, dbeta


def forward(params: dict, x: np.ndarray, config: TcnConfig, mode: str = "eval", dropout_rng=None):
    """Run the network on a batch (B, in_channels, L).

    Returns (probs (B, num_classes), cache). Dropout is active only in
    train mode; masks come from dropout_rng (whole channels dropped).
    """
    if x.ndim == 2:
        x = x[None]
    if x.shape[1] != config.input_channels:
        raise InvalidArgumentError(
            f"expected {config.input_channels} input channels, got {x.shape[1]}"
        )
    if mode not in ("train", "eval"):
        raise InvalidArgumentError(f"mode must be train or eval, got {mode!r}")
    shift = 1 if config.strict_causal else 0
    drop = config.dropout_rate if mode == "train" else 0.0
    if drop > 0 and dropout_rng is None:
        raise InvalidArgumentError("train mode with dropout needs a dropout_rng")
    h = np.ascontiguousarray(x, dtype=np.float64)
    blocks = []
    for i, d in enumerate(dilations(config)):
        pre = f"block{i}"
        cache = {"in": h, "dilation": d}
        z1 = conv1d_causal(h, params[f"{pre}.w1"], params[f"{pre}.b1"], d, shift)
        n1, cache["norm1"] = _norm_forward(z1, params[f"{pre}.g1"], params[f"{pre}.beta1"])
        a1 = np.maximum(n1, 0.0)
        cache["relu1"] = n1 > 0
        if drop > 0:
            mask = (dropout_rng.random((h.shape[0], z1.shape[1], 1)) >= drop) / (1.0 - drop)
            a1 = a1 * mask
            cache["mask1"] = mask
        z2 = conv1d_causal(a1, params[f"{pre}.w2"], params[f"{pre}.b2"], d, shift)
        cache["a1"] = a1
        n2, cache["norm2"] = _norm_forward(z2, params[f"{pre}.g2"], params[f"{pre}.beta2"])
        a2 = np.maximum(n2, 0.0)
        cache["relu2"] = n2 > 0
        if drop > 0:
            mask = (dropout_rng.random((h.shape[0], z2.shape[1], 1)) >= drop) / (1.0 - drop)
            a2 = a2 * mask
            cache["mask2"] = mask
        cache["a2"] = a2
        if f"{pre}.proj" in params:
            res = np.einsum("oc,bcl->bol", params[f"{pre}.proj"], h)
        else:
            res = h
        h = a2 + res
        blocks.append(cache)
    pooled = h.mean(axis=2)
    logits = pooled @ params["head.w"].T + params["head.b"]
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    probs = expl / expl.sum(axis=1, keepdims=True)
    cache = {"blocks": blocks, "features": h, "pooled": pooled, "probs": probs}
    return probs, cache


def causal_activations(params: dict, x: np.ndarray, config: TcnConfig):
    """Every convolutional activation (post norm/ReLU, pre-residual), for
    causality checks. In strict mode the activation at index t is unaffected
    by input[t]; the residual path intentionally is not (it adds the raw
    block input), so block sums are excluded here."""
    _, cache = forward(params, x, config, mode="eval")
    acts = []
    for blk in cache["blocks"]:
        acts.append(blk["a1"])
        acts.append(blk["a2"])
    return acts


def loss_and_grads(params: dict, x: np.ndarray, labels: np.ndarray, config: TcnConfig,
                   mode: str = "train", dropout_rng=None):
    """Cross-entropy loss (mean over batch) and gradients for every parameter."""
    labels = np.asarray(labels, dtype=np.int64)
    probs, cache = forward(params, x, config, mode=mode, dropout_rng=dropout_rng)
    b = probs.shape[0]
    eps = 1e-300
    loss = float(-np.log(probs[np.arange(b), labels] + eps).mean())
    grads = {}
    dlogits = probs.copy()
    dlogits[np.arange(b), labels] -= 1.0
    dlogits /= b
    grads["head.w"] = dlogits.T @ cache["pooled"]
    grads["head.b"] = dlogits.sum(axis=0)
    length = cache["features"].shape[2]
    dh = (dlogits @ params["head.w"])[:, :, None] / length * np.ones((1, 1, length))
    shift = 1 if config.strict_causal else 0
    for i in reversed(range(len(cache["blocks"]))):
        blk = cache["blocks"][i]
        pre = f"block{i}"
        d = blk["dilation"]
        da2 = dh
        if "mask2" in blk:
            da2 = da2 * blk["mask2"]
        dn2 = da2 * blk["relu2"]
        dz2, dg2, dbeta2 = _norm_backward(dn2, params[f"{pre}.g2"], blk["norm2"])
        grads[f"{pre}.g2"], grads[f"{pre}.beta2"] = dg2, dbeta2
        da1, dw2, db2 = conv1d_causal_backward(blk["a1"], params[f"{pre}.w2"], dz2, d, shift)
        grads[f"{pre}.w2"], grads[f"{pre}.b2"] = dw2, db2
        if "mask1" in blk:
            da1 = da1 * blk["mask1"]
        dn1 = da1 * blk["relu1"]
        dz1, dg1, dbeta1 = _norm_backward(dn1, params[f"{pre}.g1"], blk["norm1"])
        grads[f"{pre}.g1"], grads[f"{pre}.beta1"] = dg1, dbeta1
        dhin, dw1, db1 = conv1d_causal_backward(blk["in"], params[f"{pre}.w1"], dz1, d, shift)
        grads[f"{pre}.w1"], grads[f"{pre}.b1"] = dw1, db1
        if f"{pre}.proj" in params:
            grads[f"{pre}.proj"] = np.einsum("bol,bcl->oc", dh, blk["in"])
            dhin += np.einsum("oc,bol->bcl", params[f"{pre}.proj"], dh)
        else:
            dhin += dh
        dh = dhin
    return loss, grads


def _stack_windows(dataset):
    lengths = {w.channels.shape[1] for w in dataset}
    if len(lengths) != 1:
        raise InvalidDatasetError("all training windows must share one length")
    x = np.stack([w.channels for w in dataset])
    labels = []
    for w in dataset:
        if w.label is None:
            raise InvalidDatasetError("every training window must carry a label")
        labels.append(int(w.label))
    return x, np.asarray(labels, dtype=np.int64)


def train(params: dict, dataset, config: TcnConfig, epochs: int, lr: float = 1e-3,
          batch_size: int = 16, seed: int = None, betas=(0.9, 0.999), eps: float = 1e-8):
    """Mini-batch Adam with seeded shuffling.

    Returns (params, loss_history); loss_history[e] is the mean batch loss
    of epoch e. Deterministic for a fixed seed.
    """
    if not dataset:
        raise InvalidDatasetError("dataset is empty")
    x, labels = _stack_windows(dataset)
    rng = np.random.default_rng(config.seed if seed is None else seed)
    params = {k: v.copy() for k, v in params.items()}
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(vv) for k, vv in params.items()}
    b1, b2 = betas
    step = 0
    history = []
    n = x.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        nb = 0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            loss, grads = loss_and_grads(
                params, x[idx], labels[idx], config, mode="train", dropout_rng=rng
            )
            step += 1
            for k, g in grads.items():
                m[k] = b1 * m[k] + (1.0 - b1) * g
                v[k] = b2 * v[k] + (1.0 - b2) * g * g
                mhat = m[k] / (1.0 - b1**step)
                vhat = v[k] / (1.0 - b2**step)
                params[k] -= lr * mhat / (np.sqrt(vhat) + eps)
            epoch_loss += loss
            nb += 1
        history.append(epoch_loss / nb)
    return params, history


def predict_score(params: dict, window, config: TcnConfig) -> AttentionScore:
    """Wakeful-class probability for one HyperPatternWindow."""
    probs, _ = forward(params, window.channels, config, mode="eval")
    return AttentionScore(value=float(probs[0, 1]), window_start_ms=window.window_start_ms)


def evaluate_accuracy(params: dict, dataset, config: TcnConfig) -> float:
    x, labels = _stack_windows(dataset)
    probs, _ = forward(params, x, config, mode="eval")
    return float((probs.argmax(axis=1) == labels).mean())
