"""End-to-end glue: the PPG branch, the saliency branch, window alignment,
deterministic replay, training/eval commands, and fusion calibration.

All randomness flows from the run seed through seeds.derive_seed with fixed
component tags, so every command is replayable byte for byte.
"""

from pathlib import Path

import numpy as np

from . import formats, fusion, metrics, ppg, seeds, ssfcn, synth, tcn
from .config import RunConfig
from .errors import AlignmentError, IngestError, InvalidDatasetError

PPG_SEED_TAG = "ppg-generator"
CLIP_SEED_TAG = "clip-generator"
SPLIT_SEED_TAG = "train-split"
TRAIN_SEED_TAG = "tcn-train"
MODEL_SEED_TAG = "model-init"


def bank_transient_len(fir_order: int) -> int:
    # band channels cascade three order-length stages: 3*order - 2 taps
    return ppg.edge_transient_len(3 * fir_order - 2)


def ppg_to_windows(series: ppg.PpgSeries, cfg: RunConfig, label=None):
    """The PPG branch up to the network input: decimate, hyper-filter,
    trim edge transients, window, z-normalize."""
    factor = cfg["dsp.decimate_factor"]
    order = cfg["dsp.fir_order"]
    low = ppg.decimate(series, factor, anti_alias_order=order) if factor > 1 else series
    bank = ppg.build_filter_bank(low.sample_rate_hz, order=order)
    matrix = ppg.apply_filter_bank(low, bank)
    start_ms = low.start_time_ms
    if cfg["dsp.trim_transient"]:
        trim = bank_transient_len(order)
        if matrix.shape[1] <= 2 * trim:
            raise InvalidDatasetError(
                "series too short: nothing remains after trimming filter transients"
            )
        matrix = matrix[:, trim:-trim]
        start_ms += round(trim * 1000.0 / low.sample_rate_hz)
    window_len = int(round(cfg["dsp.window_len_s"] * low.sample_rate_hz))
    hop = int(round(cfg["dsp.hop_s"] * low.sample_rate_hz))
    return ppg.segment_windows(
        matrix, window_len, hop, low.sample_rate_hz, start_time_ms=start_ms, label=label
    )


def gen_tcn_dataset(cfg: RunConfig, windows_per_class: int, duration_s: float = 60.0):
    """Balanced synthetic two-class window set via the full PPG branch.

    Drowsy recordings get slower, more regular pulses (lower heart-rate
    range, low beat jitter); wakeful ones faster and more irregular."""
    base = seeds.derive_seed(cfg["seed"], PPG_SEED_TAG)
    hr_ranges = {"drowsy": (0.95, 1.15), "wakeful": (1.25, 1.45)}
    dataset = []
    for label, name in ((0, "drowsy"), (1, "wakeful")):
        collected = []
        rec = 0
        while len(collected) < windows_per_class:
            rec_seed = seeds.derive_seed(base, f"{name}-{rec}")
            rng = np.random.default_rng(rec_seed)
            spec = synth.SyntheticPpgSpec(
                label=name,
                heart_rate_hz=float(rng.uniform(*hr_ranges[name])),
                duration_s=duration_s,
                seed=rec_seed,
            )
            collected.extend(ppg_to_windows(synth.gen_synthetic_ppg(spec), cfg, label=label))
            rec += 1
        dataset.extend(collected[:windows_per_class])
    return dataset


def split_dataset(dataset, cfg: RunConfig):
    """Deterministic seeded shuffle split by split.train_fraction."""
    rng = np.random.default_rng(seeds.derive_seed(cfg["seed"], SPLIT_SEED_TAG))
    order = rng.permutation(len(dataset))
    n_train = int(round(len(dataset) * cfg["split.train_fraction"]))
    train = [dataset[i] for i in order[:n_train]]
    test = [dataset[i] for i in order[n_train:]]
    return train, test


def train_tcn(cfg: RunConfig, dataset):
    """Split, train, and report test accuracy.

    Returns (params, tcn_config, loss_history, test_accuracy)."""
    config = cfg.tcn_config(seed=seeds.derive_seed(cfg["seed"], MODEL_SEED_TAG))
    train_set, test_set = split_dataset(dataset, cfg)
    params = tcn.init_params(config)
    params, history = tcn.train(
        params,
        train_set,
        config,
        epochs=cfg["tcn.epochs"],
        lr=cfg["tcn.learning_rate"],
        batch_size=cfg["tcn.batch_size"],
        seed=seeds.derive_seed(cfg["seed"], TRAIN_SEED_TAG),
    )
    accuracy = tcn.evaluate_accuracy(params, test_set, config) if test_set else float("nan")
    return params, config, history, accuracy


def load_labeled_ppg_dir(cfg: RunConfig, data_dir):
    """CSV recordings named drowsy_*.csv / wakeful_*.csv into labeled windows."""
    dataset = []
    paths = sorted(Path(data_dir).glob("*.csv"))
    if not paths:
        raise IngestError(f"{data_dir}: no .csv recordings found")
    for path in paths:
        name = path.name
        if name.startswith("drowsy"):
            label = 0
        elif name.startswith("wakeful"):
            label = 1
        else:
            raise IngestError(f"{path}: filename must start with 'drowsy' or 'wakeful'")
        dataset.extend(ppg_to_windows(formats.load_ppg_csv(path), cfg, label=label))
    return dataset


# ------------------------------------------------------------ clip datasets

def write_clip_dataset(out_dir, triples):
    """gen_synthetic_clips output to disk: per-clip directory with frames,
    truth density (.f64 + .pgm), and a fixation PGM."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, (clip, truth, fix) in enumerate(triples):
        d = out / f"clip_{i:03d}"
        d.mkdir(exist_ok=True)
        for t in range(clip.frames.shape[0]):
            frame = clip.frames[t]
            if frame.shape[2] == 3:
                formats.write_ppm(d / f"frame_{t:06d}.ppm", frame)
            else:
                formats.write_pgm(d / f"frame_{t:06d}.pgm", frame[:, :, 0])
        formats.write_map(d / "truth", truth)
        formats.write_pgm(d / "fixations.pgm", fix * 255)


def read_clip_dataset(clips_dir, config: ssfcn.SsfcnConfig):
    """Inverse of write_clip_dataset; returns (clip, truth, fixations) triples."""
    triples = []
    dirs = sorted(p for p in Path(clips_dir).iterdir() if p.is_dir())
    if not dirs:
        raise IngestError(f"{clips_dir}: no clip_* directories found")
    for d in dirs:
        frame_paths = sorted(d.glob("frame_*.p[gp]m"))
        if len(frame_paths) != config.clip_len:
            raise IngestError(f"{d}: expected {config.clip_len} frames, found {len(frame_paths)}")
        frames = np.stack([np.asarray(formats.read_pnm(p)) for p in frame_paths])
        if frames.ndim == 3:
            frames = frames[..., None]
        clip = ssfcn.VideoClip(frames=frames.astype(np.float64) / 255.0)
        fix = formats.read_pnm(d / "fixations.pgm")
        truth = formats.read_f64(d / "truth.f64", fix.shape)
        triples.append((clip, truth, fix != 0))
    return triples


def train_ssfcn(cfg: RunConfig, triples, steps=None):
    """Cyclic single-clip momentum-GD training over the clip set.

    Returns (params, ssfcn_config, per-step loss history)."""
    config = cfg.ssfcn_config(seed=seeds.derive_seed(cfg["seed"], MODEL_SEED_TAG))
    params = ssfcn.init_params(config)
    velocity = None
    history = []
    steps = cfg["ssfcn.steps"] if steps is None else steps
    for step in range(steps):
        clip, truth, _ = triples[step % len(triples)]
        params, velocity, loss = ssfcn.ssfcn_train_step(params, clip, truth, config, velocity)
        history.append(loss)
    return params, config, history


def eval_saliency(params, config: ssfcn.SsfcnConfig, triples):
    """Metric rows (index, auc, nss, cc, sim) for each clip's prediction."""
    rows = []
    for i, (clip, truth, fix) in enumerate(triples):
        pred = ssfcn.ssfcn_forward(params, clip, config)
        rows.append(
            (
                i,
                metrics.metric_auc(pred, fix),
                metrics.metric_nss(pred, fix),
                metrics.metric_cc(pred, truth),
                metrics.metric_sim(pred, truth),
            )
        )
    return rows


# ------------------------------------------------------------------ replay

def load_map_sequence(maps_dir):
    """Sorted map_*.f64 sidecars (shape from the paired .pgm)."""
    paths = sorted(Path(maps_dir).glob("*.f64"))
    if not paths:
        raise IngestError(f"{maps_dir}: no .f64 maps found")
    out = []
    for p in paths:
        pgm = p.with_suffix(".pgm")
        if not pgm.exists():
            raise IngestError(f"{p}: missing paired {pgm.name} (needed for the shape)")
        shape = formats.read_pnm(pgm).shape
        out.append(formats.read_f64(p, shape))
    return out


def window_scene_dynamics(windows, maps, frame_rate_fps, window_len_s):
    """Per-window SceneDynamics from all maps whose timestamps fall inside
    the window span."""
    map_times = [i * 1000.0 / frame_rate_fps for i in range(len(maps))]
    span_ms = window_len_s * 1000.0
    out = []
    for w in windows:
        inside = [m for m, t in zip(maps, map_times) if w.window_start_ms <= t < w.window_start_ms + span_ms]
        if len(inside) < 2:
            raise AlignmentError(
                f"window at {w.window_start_ms} ms covers {len(inside)} saliency maps; need >= 2"
            )
        out.append(metrics.scene_dynamics(inside, window_start_ms=w.window_start_ms))
    return out


def replay(cfg: RunConfig, ppg_path, maps_dir, out_log, model_path=None):
    """Full pipeline on recorded inputs; writes the JSON-lines decision log
    and a .events.jsonl sidecar. Returns (decisions, events)."""
    series = formats.load_ppg_csv(ppg_path)
    if model_path is not None:
        params, tcn_cfg = formats.load_tcn_checkpoint(model_path)
    else:
        tcn_cfg = cfg.tcn_config(seed=seeds.derive_seed(cfg["seed"], MODEL_SEED_TAG))
        params = tcn.init_params(tcn_cfg)
    windows = ppg_to_windows(series, cfg)
    if not windows:
        raise AlignmentError("no analysis windows could be formed from the PPG input")
    maps = load_map_sequence(maps_dir)
    map_duration_ms = len(maps) * 1000.0 / cfg["replay.frame_rate_fps"]
    ppg_end_ms = series.start_time_ms + len(series) * 1000.0 / series.sample_rate_hz
    if map_duration_ms > ppg_end_ms + 1000.0 / cfg["replay.frame_rate_fps"]:
        raise AlignmentError("saliency map sequence outlasts the PPG recording")
    dynamics = window_scene_dynamics(
        windows, maps, cfg["replay.frame_rate_fps"], cfg["dsp.window_len_s"]
    )
    scores = [tcn.predict_score(params, w, tcn_cfg) for w in windows]
    decisions, events = fusion.stream_decide(list(zip(scores, dynamics)), cfg.fusion_config())
    out_log = Path(out_log)
    out_log.write_text(
        "".join(fusion.decision_log_line(d) + "\n" for d in decisions), encoding="utf-8"
    )
    events_path = out_log.with_suffix(out_log.suffix + ".events.jsonl")
    events_path.write_text(
        "".join(
            "{"
            f'"t_ms":{e.window_start_ms},'
            f'"score":{e.score:.6f},'
            f'"gradient":{e.gradient:.6f},'
            f'"reason":"{e.reason}"'
            "}\n"
            for e in events
        ),
        encoding="utf-8",
    )
    return decisions, events


# --------------------------------------------------------------- calibration

def calibrate_fusion(rows, theta_grid=None, high_min_grid=None, debounce=1):
    """Grid search (theta, attention_high_min) maximizing alert accuracy on
    labeled (score, gradient, expected_alert) rows. Ties resolve to the
    lowest theta, then the lowest attention_high_min."""
    if theta_grid is None:
        theta_grid = [round(0.05 * i, 2) for i in range(1, 20)]
    if high_min_grid is None:
        high_min_grid = [round(0.05 * i, 2) for i in range(1, 21)]
    best = None
    for theta in theta_grid:
        for high_min in high_min_grid:
            cfg = fusion.FusionConfig(theta=theta, attention_high_min=high_min, debounce_windows=debounce)
            correct = 0
            for score, gradient, expected in rows:
                d = fusion.decide(
                    fusion.AttentionScore(value=score),
                    metrics.SceneDynamics(gradient=gradient),
                    cfg,
                )
                correct += d.alert == bool(expected)
            acc = correct / len(rows) if rows else 0.0
            key = (acc, -theta, -high_min)
            if best is None or key > best[0]:
                best = (key, theta, high_min, acc)
    return {"theta": best[1], "attention_high_min": best[2], "accuracy": best[3]}


def load_calibration_csv(path):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "t_ms,score,gradient,expected_alert":
        raise IngestError(f"{path}: expected header 't_ms,score,gradient,expected_alert'")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise IngestError(f"{path}: malformed row at line {lineno}")
        try:
            rows.append((float(parts[1]), float(parts[2]), int(parts[3])))
        except ValueError:
            raise IngestError(f"{path}: non-numeric field at line {lineno}")
    return rows
