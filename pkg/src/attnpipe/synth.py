"""Synthetic data generators standing in for the clinical PPG recordings and
the driving-scene footage.

PPG: a pulse train of asymmetric systolic peaks with a dicrotic shoulder,
a 0.2 Hz respiratory baseline, and seeded Gaussian noise. The classes are
separated by beat-to-beat period variability: wakeful recordings carry much
larger per-beat jitter than drowsy ones. Dataset generation adds a second
cue on top by drawing drowsy recordings from a slower heart-rate range
(see pipeline.gen_tcn_dataset).

Clips: a bright moving Gaussian blob over a static low-contrast texture;
the ground-truth density is the blob profile of the final frame, and
fixations are samples drawn from that density.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpecError
from .ppg import PpgSeries
from .ssfcn import VideoClip

# class-separating generator defaults (fraction of the beat period)
DROWSY_JITTER = 0.02
WAKEFUL_JITTER = 0.18

DICROTIC_DELAY_FRAC = 0.35  # of the beat period
DICROTIC_AMPLITUDE = 0.22
RESP_RATE_HZ = 0.2
RESP_AMPLITUDE = 0.15


@dataclass(frozen=True)
class SyntheticPpgSpec:
    label: str  # "drowsy" or "wakeful"
    heart_rate_hz: float = 1.2
    hr_jitter: float = None  # fraction of the beat period; None = class default
    noise_std: float = 0.02
    duration_s: float = 30.0
    sample_rate_hz: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        if self.label not in ("drowsy", "wakeful"):
            raise InvalidSpecError(f"label must be drowsy or wakeful, got {self.label!r}")
        if not 0.6 <= self.heart_rate_hz <= 3.0:
            raise InvalidSpecError("heart_rate_hz must be in [0.6, 3.0]")
        if self.duration_s <= 0:
            raise InvalidSpecError("duration_s must be positive")
        if self.hr_jitter is None:
            object.__setattr__(
                self, "hr_jitter", DROWSY_JITTER if self.label == "drowsy" else WAKEFUL_JITTER
            )


def _beat_shape(t, onset, period):
    """One cardiac pulse: fast-rise / slow-fall systolic peak plus a
    dicrotic shoulder on the falling edge."""
    dt = t - onset
    rise = 0.09 * period
    fall = 0.22 * period
    sigma = np.where(dt < 0, rise, fall)
    pulse = np.exp(-0.5 * (dt / sigma) ** 2)
    dic = DICROTIC_AMPLITUDE * np.exp(
        -0.5 * ((dt - DICROTIC_DELAY_FRAC * period) / (0.12 * period)) ** 2
    )
    return pulse + dic


def gen_synthetic_ppg(spec: SyntheticPpgSpec) -> PpgSeries:
    """Labeled synthetic PPG series; label is 0 (drowsy) / 1 (wakeful) via
    the spec, the series itself carries only samples."""
    rng = np.random.default_rng(spec.seed)
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    period = 1.0 / spec.heart_rate_hz
    x = RESP_AMPLITUDE * np.sin(2.0 * np.pi * RESP_RATE_HZ * t)
    onset = 0.5 * period
    while onset < spec.duration_s + period:
        x += _beat_shape(t, onset, period)
        onset += period * (1.0 + spec.hr_jitter * float(np.clip(rng.standard_normal(), -3, 3)))
    if spec.noise_std > 0:
        x += rng.normal(0.0, spec.noise_std, size=n)
    return PpgSeries(sample_rate_hz=spec.sample_rate_hz, start_time_ms=0, samples=x)


def _blob(size, cy, cx, sigma, peak):
    yy, xx = np.mgrid[0:size, 0:size]
    return peak * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma**2))


def gen_synthetic_clips(n: int, seed: int, size: int = 64, clip_len: int = 8,
                        channels: int = 3, num_fixations: int = 20):
    """n synthetic (VideoClip, truth density, fixation map) triples.

    The blob moves linearly across the frame; truth is a sharpened (cubed)
    copy of its final-frame profile so the density stays close to binary
    and its pixel-entropy floor keeps cross-entropy losses near zero;
    fixations are density samples.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        texture = 0.08 * rng.random((size, size, channels))
        cy, cx = rng.uniform(12, size - 12, size=2)
        vy, vx = rng.uniform(-2.5, 2.5, size=2)
        sigma = rng.uniform(5.0, 7.0)
        frames = np.empty((clip_len, size, size, channels))
        for ti in range(clip_len):
            b = _blob(size, cy + vy * ti, cx + vx * ti, sigma, 0.85)
            frames[ti] = np.clip(texture + b[:, :, None], 0.0, 1.0)
        truth = _blob(size, cy + vy * (clip_len - 1), cx + vx * (clip_len - 1), sigma, 1.0) ** 3
        p = truth.ravel() / truth.sum()
        idx = rng.choice(truth.size, size=num_fixations, replace=False, p=p)
        fix = np.zeros((size, size), dtype=np.uint8)
        fix.ravel()[idx] = 1
        out.append((VideoClip(frames=frames), truth, fix))
    return out


def gen_replay_maps(kind: str, n_frames: int, seed: int, size: int = 64):
    """Saliency-map sequences for replay tests.

    'static': one fixed map repeated (scene gradient 0); 'dynamic': frames
    alternating between low and high intensity (gradient well above 0.45).
    """
    rng = np.random.default_rng(seed)
    if kind == "static":
        base = rng.random((size, size))
        return [base.copy() for _ in range(n_frames)]
    if kind == "dynamic":
        lo = np.full((size, size), 0.05) + 0.03 * rng.random((size, size))
        hi = np.full((size, size), 0.92) + 0.03 * rng.random((size, size))
        return [(hi if i % 2 else lo).copy() for i in range(n_frames)]
    raise InvalidSpecError(f"kind must be static or dynamic, got {kind!r}")
