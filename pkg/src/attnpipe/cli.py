"""Command-line interface.

Subcommands: gen-ppg, gen-clips, filter, train-tcn, train-ssfcn,
eval-saliency, replay, calibrate. Global flags: --config, --seed (overrides
the config seed), --out.

Exit codes: 0 ok, 2 ingest error, 3 alignment error, 4 config error.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import formats, pipeline, ppg, seeds, synth
from .config import default_config, load_config
from .errors import AlignmentError, ConfigError, IngestError


def _build_parser():
    parser = argparse.ArgumentParser(prog="attnpipe", description=__doc__)
    parser.add_argument("--config", help="run-configuration file (section.key = value lines)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="output path (or directory, per subcommand)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-ppg", help="write a synthetic labeled PPG CSV")
    p.add_argument("--label", choices=("drowsy", "wakeful"), required=True)
    p.add_argument("--duration-s", type=float, default=60.0)
    p.add_argument("--heart-rate-hz", type=float, default=1.2)
    p.add_argument("--noise-std", type=float, default=0.02)

    p = sub.add_parser("gen-clips", help="write a synthetic clip dataset directory")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--size", type=int, default=64)

    p = sub.add_parser("filter", help="run the hyper-filter bank over a PPG CSV")
    p.add_argument("ppg_csv")
    p.add_argument("--taps-dir", help="also export per-channel taps as idx,tap CSVs")

    p = sub.add_parser("train-tcn", help="train the drowsiness classifier")
    p.add_argument("--data-dir", help="directory of drowsy_*.csv / wakeful_*.csv recordings")
    p.add_argument("--synthetic-windows", type=int,
                   help="generate this many windows per class instead of reading --data-dir")
    p.add_argument("--loss-csv", help="write the per-epoch loss history")

    p = sub.add_parser("train-ssfcn", help="overfit the saliency network on a clip dataset")
    p.add_argument("clips_dir")
    p.add_argument("--steps", type=int)
    p.add_argument("--loss-csv", help="write the per-step loss history")

    p = sub.add_parser("eval-saliency", help="metric CSV (frame,auc,nss,cc,sim) for a model")
    p.add_argument("clips_dir")
    p.add_argument("--model", required=True, help="SS-FCN checkpoint")

    p = sub.add_parser("replay", help="end-to-end deterministic replay to a JSON-lines log")
    p.add_argument("ppg_csv")
    p.add_argument("maps_dir")
    p.add_argument("--model", help="TCN checkpoint (seed-initialized weights if omitted)")

    p = sub.add_parser("calibrate", help="grid-search fusion thresholds on a labeled log")
    p.add_argument("labeled_csv", help="CSV with header t_ms,score,gradient,expected_alert")

    return parser


def _require_out(args, what="output path"):
    if not args.out:
        raise ConfigError(f"--out is required: {what}")
    return args.out


def _run(args):
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)

    if args.command == "gen-ppg":
        out = _require_out(args, "destination CSV")
        spec = synth.SyntheticPpgSpec(
            label=args.label,
            heart_rate_hz=args.heart_rate_hz,
            noise_std=args.noise_std,
            duration_s=args.duration_s,
            seed=seeds.derive_seed(cfg["seed"], pipeline.PPG_SEED_TAG),
        )
        formats.save_ppg_csv(out, synth.gen_synthetic_ppg(spec))
        print(f"wrote {out}")

    elif args.command == "gen-clips":
        out = _require_out(args, "destination directory")
        triples = synth.gen_synthetic_clips(
            args.n,
            seed=seeds.derive_seed(cfg["seed"], pipeline.CLIP_SEED_TAG),
            size=args.size,
            clip_len=cfg["ssfcn.clip_len"],
            channels=cfg["ssfcn.in_channels"],
        )
        pipeline.write_clip_dataset(out, triples)
        print(f"wrote {args.n} clips to {out}")

    elif args.command == "filter":
        out = _require_out(args, "filtered-matrix .f64 path")
        series = formats.load_ppg_csv(args.ppg_csv)
        factor = cfg["dsp.decimate_factor"]
        low = ppg.decimate(series, factor, anti_alias_order=cfg["dsp.fir_order"]) if factor > 1 else series
        bank = ppg.build_filter_bank(low.sample_rate_hz, order=cfg["dsp.fir_order"])
        matrix = ppg.apply_filter_bank(low, bank)
        formats.write_f64(out, matrix)
        if args.taps_dir:
            taps_dir = Path(args.taps_dir)
            taps_dir.mkdir(parents=True, exist_ok=True)
            for i, taps in enumerate(ppg.bank_taps(bank, low.sample_rate_hz)):
                formats.save_taps_csv(taps_dir / f"channel_{i:02d}.csv", taps)
        print(f"wrote 22x{matrix.shape[1]} matrix to {out}")

    elif args.command == "train-tcn":
        out = _require_out(args, "checkpoint path")
        if args.synthetic_windows:
            dataset = pipeline.gen_tcn_dataset(cfg, args.synthetic_windows)
        elif args.data_dir:
            dataset = pipeline.load_labeled_ppg_dir(cfg, args.data_dir)
        else:
            raise ConfigError("train-tcn needs --data-dir or --synthetic-windows")
        params, tcn_cfg, history, accuracy = pipeline.train_tcn(cfg, dataset)
        formats.save_tcn_checkpoint(out, params, tcn_cfg)
        if args.loss_csv:
            formats.save_loss_csv(args.loss_csv, history)
        print(f"wrote {out}; final loss {history[-1]:.4f}, test accuracy {accuracy:.4f}")

    elif args.command == "train-ssfcn":
        out = _require_out(args, "checkpoint path")
        triples = pipeline.read_clip_dataset(args.clips_dir, cfg.ssfcn_config())
        params, ss_cfg, history = pipeline.train_ssfcn(cfg, triples, steps=args.steps)
        formats.save_ssfcn_checkpoint(out, params, ss_cfg)
        if args.loss_csv:
            formats.save_loss_csv(args.loss_csv, history)
        print(f"wrote {out}; final loss {history[-1]:.4f}")

    elif args.command == "eval-saliency":
        out = _require_out(args, "metric CSV path")
        params, ss_cfg = formats.load_ssfcn_checkpoint(args.model)
        triples = pipeline.read_clip_dataset(args.clips_dir, ss_cfg)
        rows = pipeline.eval_saliency(params, ss_cfg, triples)
        formats.save_metrics_csv(out, rows)
        print(f"wrote {out}")

    elif args.command == "replay":
        out = _require_out(args, "JSON-lines log path")
        decisions, events = pipeline.replay(
            cfg, args.ppg_csv, args.maps_dir, out, model_path=args.model
        )
        print(f"wrote {out}: {len(decisions)} decisions, {len(events)} alert events")

    elif args.command == "calibrate":
        rows = pipeline.load_calibration_csv(args.labeled_csv)
        result = pipeline.calibrate_fusion(rows, debounce=cfg["fusion.debounce_windows"])
        line = (
            f"theta={result['theta']:.2f} "
            f"attention_high_min={result['attention_high_min']:.2f} "
            f"accuracy={result['accuracy']:.4f}"
        )
        if args.out:
            Path(args.out).write_text(line + "\n", encoding="utf-8")
        print(line)

    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except (IngestError, OSError) as exc:
        # unreadable/missing input files are ingest failures
        print(f"ingest error: {exc}", file=sys.stderr)
        return 2
    except AlignmentError as exc:
        print(f"alignment error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
