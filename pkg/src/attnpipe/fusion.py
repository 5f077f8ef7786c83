"""Driver Attention Analyzer: compares measured attention against the
attention the scene requires and emits alert events.

Decision rule: a scene is 'dynamic' when the normalized saliency gradient
exceeds theta (ties are static); attention is 'medium_low' up to 0.6 and
'high' from attention_high_min (default 0.61) upward. An alert fires on a
dynamic scene with medium-low attention, after the configured number of
consecutive alerting windows (debounce).
"""

import json
from dataclasses import dataclass
from enum import Enum

from .errors import AlignmentError, InvalidArgumentError
from .metrics import SceneDynamics

ALERT_REASON = "attention below scenario requirement"


class AttentionClass(Enum):
    MEDIUM_LOW = "medium_low"
    HIGH = "high"


class SceneClass(Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True)
class FusionConfig:
    theta: float = 0.45
    attention_high_min: float = 0.61
    debounce_windows: int = 1

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise InvalidArgumentError("theta must be in (0, 1)")
        if not 0.0 < self.attention_high_min <= 1.0:
            raise InvalidArgumentError("attention_high_min must be in (0, 1]")
        if self.debounce_windows < 1:
            raise InvalidArgumentError("debounce_windows must be >= 1")


@dataclass(frozen=True)
class AttentionScore:
    value: float  # probability of the wakeful class
    window_start_ms: int = 0

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise InvalidArgumentError(f"attention score out of [0,1]: {self.value}")


@dataclass(frozen=True)
class FusionDecision:
    window_start_ms: int
    attention_class: AttentionClass
    scene_class: SceneClass
    alert: bool
    score: float
    gradient: float


@dataclass(frozen=True)
class AlertEvent:
    window_start_ms: int
    score: float
    gradient: float
    reason: str = ALERT_REASON


def classify_attention(score: AttentionScore, cfg: FusionConfig) -> AttentionClass:
    """Medium-low for values up to 0.6; high from attention_high_min upward."""
    v = score.value
    if v <= 0.6:
        return AttentionClass.MEDIUM_LOW
    return AttentionClass.HIGH if v >= cfg.attention_high_min else AttentionClass.MEDIUM_LOW


def classify_scene(dyn: SceneDynamics, cfg: FusionConfig) -> SceneClass:
    """Dynamic strictly above theta; a gradient exactly at theta is static."""
    if not 0.0 <= dyn.gradient <= 1.0:
        raise InvalidArgumentError(f"gradient out of [0,1]: {dyn.gradient}")
    return SceneClass.DYNAMIC if dyn.gradient > cfg.theta else SceneClass.STATIC


def decide(score: AttentionScore, dyn: SceneDynamics, cfg: FusionConfig) -> FusionDecision:
    attention = classify_attention(score, cfg)
    scene = classify_scene(dyn, cfg)
    return FusionDecision(
        window_start_ms=score.window_start_ms,
        attention_class=attention,
        scene_class=scene,
        alert=scene is SceneClass.DYNAMIC and attention is AttentionClass.MEDIUM_LOW,
        score=score.value,
        gradient=dyn.gradient,
    )


def stream_decide(pairs, cfg: FusionConfig):
    """Run the decision rule over a time-ordered (score, dynamics) stream.

    Returns (decisions, events). An AlertEvent is emitted at every decision
    whose run of consecutive alerting windows has reached debounce_windows.
    """
    decisions = []
    events = []
    consecutive = 0
    last_t = None
    for score, dyn in pairs:
        if score.window_start_ms != dyn.window_start_ms:
            raise AlignmentError(
                f"misaligned pair: score at {score.window_start_ms} ms, "
                f"dynamics at {dyn.window_start_ms} ms"
            )
        if last_t is not None and score.window_start_ms <= last_t:
            raise AlignmentError("timestamps must be strictly increasing")
        last_t = score.window_start_ms
        d = decide(score, dyn, cfg)
        decisions.append(d)
        consecutive = consecutive + 1 if d.alert else 0
        if consecutive >= cfg.debounce_windows:
            events.append(
                AlertEvent(window_start_ms=d.window_start_ms, score=d.score, gradient=d.gradient)
            )
    return decisions, events


def decision_log_line(d: FusionDecision) -> str:
    """One JSON-lines record; fixed key order and 6-digit float formatting
    so replays of identical inputs are byte-identical."""
    return (
        "{"
        f'"t_ms":{d.window_start_ms},'
        f'"score":{d.score:.6f},'
        f'"gradient":{d.gradient:.6f},'
        f'"attention":"{d.attention_class.value}",'
        f'"scene":"{d.scene_class.value}",'
        f'"alert":{"true" if d.alert else "false"}'
        "}"
    )


def parse_decision_log(text: str):
    """Parse a JSON-lines decision log back into dicts."""
    return [json.loads(line) for line in text.splitlines() if line.strip()]
