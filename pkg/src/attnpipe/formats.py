"""File formats: PPG CSV, filter-tap CSV, PGM/PPM images, raw float64 map
sidecars, metric/loss CSVs, and the binary model checkpoints.

Checkpoints are little-endian: 4 magic bytes ("TCN1" / "SFC1"), a fixed
config block, then the parameter tensors as raw float64 in declaration
order (see tcn.param_shapes / ssfcn.param_shapes).
"""

import struct
from pathlib import Path

import numpy as np

from .errors import IngestError
from .ppg import PpgSeries
from . import tcn as _tcn
from . import ssfcn as _ssfcn

TCN_MAGIC = b"TCN1"
SSFCN_MAGIC = b"SFC1"


# ---------------------------------------------------------------- PPG CSV

def load_ppg_csv(path) -> PpgSeries:
    """UTF-8 CSV with header t_ms,value; constant timestamp step required."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "t_ms,value":
        raise IngestError(f"{path}: expected header 't_ms,value'")
    times = []
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise IngestError(f"{path}: malformed row at line {lineno}")
        try:
            t = int(parts[0])
            v = float(parts[1])
        except ValueError:
            raise IngestError(f"{path}: non-numeric field at line {lineno}")
        if not np.isfinite(v):
            raise IngestError(f"{path}: non-finite value at line {lineno}")
        if times:
            if t <= times[-1]:
                raise IngestError(f"{path}: non-increasing timestamp at line {lineno}")
            if len(times) >= 2 and t - times[-1] != times[1] - times[0]:
                raise IngestError(f"{path}: timestamp jitter at line {lineno}")
        times.append(t)
        values.append(v)
    if len(times) < 2:
        raise IngestError(f"{path}: need at least 2 samples to infer the rate")
    step_ms = times[1] - times[0]
    return PpgSeries(
        sample_rate_hz=1000.0 / step_ms,
        start_time_ms=times[0],
        samples=np.asarray(values),
    )


def save_ppg_csv(path, series: PpgSeries):
    step_ms = 1000.0 / series.sample_rate_hz
    if abs(step_ms - round(step_ms)) > 1e-9:
        raise ValueError("CSV export needs an integer millisecond step")
    step_ms = round(step_ms)
    with open(path, "w", encoding="utf-8") as f:
        f.write("t_ms,value\n")
        for i, v in enumerate(series.samples):
            # repr of a Python float round-trips exactly
            f.write(f"{series.start_time_ms + i * step_ms},{float(v)!r}\n")


def save_taps_csv(path, taps):
    with open(path, "w", encoding="utf-8") as f:
        f.write("idx,tap\n")
        for i, t in enumerate(np.asarray(taps)):
            f.write(f"{i},{float(t)!r}\n")


# --------------------------------------------------------------- PGM / PPM

def write_pgm(path, values):
    """8-bit binary PGM (P5); float input in [0,1] is scaled by 255."""
    arr = np.asarray(values)
    if arr.dtype != np.uint8:
        arr = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(arr.tobytes())


def write_ppm(path, values):
    """8-bit binary PPM (P6) from H x W x 3 floats in [0,1] or uint8."""
    arr = np.asarray(values)
    if arr.dtype != np.uint8:
        arr = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8)
    h, w, _ = arr.shape
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(arr.tobytes())


def _read_pnm_header(f, path):
    magic = f.readline().strip()
    fields = []
    while len(fields) < 3:
        line = f.readline()
        if not line:
            raise IngestError(f"{path}: truncated PNM header")
        text = line.split(b"#", 1)[0]
        fields.extend(text.split())
    w, h, maxval = (int(x) for x in fields[:3])
    if maxval != 255:
        raise IngestError(f"{path}: only 8-bit PNM supported")
    return magic, w, h


def read_pnm(path):
    """Binary PGM (P5) as H x W uint8, or PPM (P6) as H x W x 3 uint8."""
    with open(path, "rb") as f:
        magic, w, h = _read_pnm_header(f, path)
        if magic == b"P5":
            data = np.frombuffer(f.read(w * h), dtype=np.uint8)
            if data.size != w * h:
                raise IngestError(f"{path}: truncated pixel data")
            return data.reshape(h, w).copy()
        if magic == b"P6":
            data = np.frombuffer(f.read(w * h * 3), dtype=np.uint8)
            if data.size != w * h * 3:
                raise IngestError(f"{path}: truncated pixel data")
            return data.reshape(h, w, 3).copy()
    raise IngestError(f"{path}: not a binary PGM/PPM file")


def write_f64(path, values):
    """Raw row-major little-endian float64 sidecar."""
    np.asarray(values, dtype="<f8").tofile(path)


def read_f64(path, shape):
    data = np.fromfile(path, dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise IngestError(f"{path}: expected {np.prod(shape)} float64 values, got {data.size}")
    return data.reshape(shape)


def write_map(path_base, values):
    """Predicted map as PGM for inspection plus a lossless .f64 sidecar."""
    base = Path(path_base)
    write_pgm(base.with_suffix(".pgm"), values)
    write_f64(base.with_suffix(".f64"), values)


# -------------------------------------------------------------------- CSVs

def save_loss_csv(path, history):
    with open(path, "w", encoding="utf-8") as f:
        f.write("epoch,loss\n")
        for i, loss in enumerate(history):
            f.write(f"{i},{float(loss)!r}\n")


def save_metrics_csv(path, rows):
    """rows: iterable of (frame, auc, nss, cc, sim)."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("frame,auc,nss,cc,sim\n")
        for frame, auc, nss, cc, sim in rows:
            f.write(
                f"{frame},{float(auc)!r},{float(nss)!r},{float(cc)!r},{float(sim)!r}\n"
            )


# -------------------------------------------------------------- checkpoints

def save_tcn_checkpoint(path, params: dict, config: _tcn.TcnConfig):
    with open(path, "wb") as f:
        f.write(TCN_MAGIC)
        f.write(
            struct.pack(
                "<iiBiiiBdQ",
                config.num_blocks,
                config.kernel_size,
                0 if config.dilation_schedule == "increment" else 1,
                config.channels_per_block,
                config.input_channels,
                config.num_classes,
                1 if config.strict_causal else 0,
                config.dropout_rate,
                config.seed,
            )
        )
        for name, shape in _tcn.param_shapes(config):
            arr = np.ascontiguousarray(params[name], dtype="<f8")
            if arr.shape != shape:
                raise ValueError(f"parameter {name} has shape {arr.shape}, expected {shape}")
            f.write(arr.tobytes())


def load_tcn_checkpoint(path):
    with open(path, "rb") as f:
        if f.read(4) != TCN_MAGIC:
            raise IngestError(f"{path}: not a TCN checkpoint")
        header = struct.Struct("<iiBiiiBdQ")
        nb, k, sched, c, in_ch, ncls, strict, drop, seed = header.unpack(f.read(header.size))
        config = _tcn.TcnConfig(
            num_blocks=nb,
            kernel_size=k,
            dilation_schedule="increment" if sched == 0 else "doubling",
            channels_per_block=c,
            dropout_rate=drop,
            num_classes=ncls,
            input_channels=in_ch,
            seed=seed,
            strict_causal=bool(strict),
        )
        params = {}
        for name, shape in _tcn.param_shapes(config):
            count = int(np.prod(shape))
            buf = f.read(count * 8)
            if len(buf) != count * 8:
                raise IngestError(f"{path}: truncated tensor {name}")
            params[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        if f.read(1):
            raise IngestError(f"{path}: trailing bytes after last tensor")
    return params, config


def save_ssfcn_checkpoint(path, params: dict, config: _ssfcn.SsfcnConfig):
    with open(path, "wb") as f:
        f.write(SSFCN_MAGIC)
        f.write(struct.pack("<ii", config.clip_len, len(config.encoder_channels)))
        f.write(struct.pack(f"<{len(config.encoder_channels)}i", *config.encoder_channels))
        f.write(
            struct.pack(
                "<iBBddQ",
                config.in_channels,
                0 if config.temporal_pool == "mean" else 1,
                1 if config.separable else 0,
                config.learning_rate,
                config.momentum,
                config.seed,
            )
        )
        for name, shape in _ssfcn.param_shapes(config):
            arr = np.ascontiguousarray(params[name], dtype="<f8")
            if arr.shape != shape:
                raise ValueError(f"parameter {name} has shape {arr.shape}, expected {shape}")
            f.write(arr.tobytes())


def load_ssfcn_checkpoint(path):
    with open(path, "rb") as f:
        if f.read(4) != SSFCN_MAGIC:
            raise IngestError(f"{path}: not an SS-FCN checkpoint")
        clip_len, n_enc = struct.unpack("<ii", f.read(8))
        enc = struct.unpack(f"<{n_enc}i", f.read(4 * n_enc))
        tail = struct.Struct("<iBBddQ")
        in_ch, pool, sep, lr, mom, seed = tail.unpack(f.read(tail.size))
        config = _ssfcn.SsfcnConfig(
            clip_len=clip_len,
            encoder_channels=tuple(enc),
            in_channels=in_ch,
            seed=seed,
            learning_rate=lr,
            momentum=mom,
            temporal_pool="mean" if pool == 0 else "max",
            separable=bool(sep),
        )
        params = {}
        for name, shape in _ssfcn.param_shapes(config):
            count = int(np.prod(shape))
            buf = f.read(count * 8)
            if len(buf) != count * 8:
                raise IngestError(f"{path}: truncated tensor {name}")
            params[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        if f.read(1):
            raise IngestError(f"{path}: trailing bytes after last tensor")
    return params, config
