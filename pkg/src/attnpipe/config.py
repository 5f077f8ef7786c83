"""Run configuration: UTF-8 text file of `section.key = value` lines.

Unknown keys are rejected; every value is validated against the owning
module's invariants at load time, before any computation, with the failing
section.key named in the error.
"""

from dataclasses import dataclass, fields

from .errors import ConfigError
from .fusion import FusionConfig
from .ssfcn import SsfcnConfig
from .tcn import TcnConfig


def _parse_bool(s):
    low = s.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_tuple(s):
    return tuple(int(p.strip()) for p in s.split(",") if p.strip())


# key -> (parser, default)
_SCHEMA = {
    "seed": (int, 0),
    "split.train_fraction": (float, 0.70),
    "dsp.decimate_factor": (int, 20),
    "dsp.fir_order": (int, 501),
    "dsp.window_len_s": (float, 10.0),
    "dsp.hop_s": (float, 5.0),
    "dsp.trim_transient": (_parse_bool, True),
    "tcn.num_blocks": (int, 12),
    "tcn.kernel_size": (int, 3),
    "tcn.dilation_schedule": (str, "increment"),
    "tcn.channels_per_block": (int, 16),
    "tcn.dropout_rate": (float, 0.1),
    "tcn.num_classes": (int, 2),
    "tcn.input_channels": (int, 22),
    "tcn.strict_causal": (_parse_bool, True),
    "tcn.epochs": (int, 30),
    "tcn.learning_rate": (float, 1e-3),
    "tcn.batch_size": (int, 16),
    "ssfcn.clip_len": (int, 8),
    "ssfcn.encoder_channels": (_parse_int_tuple, (8, 16, 32, 64, 64)),
    "ssfcn.in_channels": (int, 3),
    "ssfcn.learning_rate": (float, 0.02),
    "ssfcn.momentum": (float, 0.9),
    "ssfcn.temporal_pool": (str, "mean"),
    "ssfcn.separable": (_parse_bool, False),
    "ssfcn.steps": (int, 300),
    "fusion.theta": (float, 0.45),
    "fusion.attention_high_min": (float, 0.61),
    "fusion.debounce_windows": (int, 1),
    "replay.frame_rate_fps": (float, 10.0),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def tcn_config(self, seed=None) -> TcnConfig:
        v = self.values
        return TcnConfig(
            num_blocks=v["tcn.num_blocks"],
            kernel_size=v["tcn.kernel_size"],
            dilation_schedule=v["tcn.dilation_schedule"],
            channels_per_block=v["tcn.channels_per_block"],
            dropout_rate=v["tcn.dropout_rate"],
            num_classes=v["tcn.num_classes"],
            input_channels=v["tcn.input_channels"],
            seed=v["seed"] if seed is None else seed,
            strict_causal=v["tcn.strict_causal"],
        )

    def ssfcn_config(self, seed=None) -> SsfcnConfig:
        v = self.values
        return SsfcnConfig(
            clip_len=v["ssfcn.clip_len"],
            encoder_channels=v["ssfcn.encoder_channels"],
            in_channels=v["ssfcn.in_channels"],
            seed=v["seed"] if seed is None else seed,
            learning_rate=v["ssfcn.learning_rate"],
            momentum=v["ssfcn.momentum"],
            temporal_pool=v["ssfcn.temporal_pool"],
            separable=v["ssfcn.separable"],
        )

    def fusion_config(self) -> FusionConfig:
        v = self.values
        return FusionConfig(
            theta=v["fusion.theta"],
            attention_high_min=v["fusion.attention_high_min"],
            debounce_windows=v["fusion.debounce_windows"],
        )

    def with_seed(self, seed: int) -> "RunConfig":
        values = dict(self.values)
        values["seed"] = seed
        return RunConfig(values=values)


def _validate(values):
    if not 0.0 < values["split.train_fraction"] < 1.0:
        raise ConfigError("split.train_fraction: must be in (0, 1)")
    if values["dsp.decimate_factor"] < 1:
        raise ConfigError("dsp.decimate_factor: must be >= 1")
    order = values["dsp.fir_order"]
    if order <= 0 or order % 2 == 0:
        raise ConfigError("dsp.fir_order: must be odd and positive")
    if values["dsp.window_len_s"] <= 0 or values["dsp.hop_s"] <= 0:
        raise ConfigError("dsp.window_len_s / dsp.hop_s: must be positive")
    cfg = RunConfig(values=values)
    for section, build in (
        ("tcn", cfg.tcn_config),
        ("ssfcn", cfg.ssfcn_config),
        ("fusion", cfg.fusion_config),
    ):
        try:
            build()
        except Exception as exc:
            raise ConfigError(f"{section}.*: {exc}") from exc
    if values["replay.frame_rate_fps"] <= 0:
        raise ConfigError("replay.frame_rate_fps: must be positive")
    if values["tcn.epochs"] < 1 or values["tcn.batch_size"] < 1 or values["ssfcn.steps"] < 1:
        raise ConfigError("training iteration counts must be >= 1")


def parse_config(text: str) -> RunConfig:
    values = {key: default for key, (_, default) in _SCHEMA.items()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        parser, _ = _SCHEMA[key]
        try:
            values[key] = parser(value.strip())
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    _validate(values)
    return RunConfig(values=values)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def default_config() -> RunConfig:
    return parse_config("")
