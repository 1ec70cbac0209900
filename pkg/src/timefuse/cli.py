"""Command-line front end: extract | collect | train | fuse | report.

Exit codes: 0 success, 2 finished with warnings (e.g. MAPE undefined on some
cells), 64 usage error, 65 data/format error, 70 internal numeric failure.
Every command validates its inputs fully before writing any output file.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, interchange
from .baselines import rank_first_analysis
from .dataset import MetaSample, MetaShard, PredictionTensor, build_joint_dataset
from .errors import (
    KOutOfRange,
    NonFiniteLoss,
    RosterMismatch,
    TimefuseError,
    UnknownMethod,
)
from .features import FEATURE_NAMES, extract_many
from .fusor import (
    TrainConfig,
    export_theta,
    load_model,
    predict_weights_batch,
    save_model,
    train_fusor,
)
from .shard_io import read_shard, write_shard

EXIT_OK = 0
EXIT_WARNINGS = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NUMERIC = 70

KNOWN_METHODS = ("fused", "mean", "median", "topk", "forward", "zeroshot", "best-individual")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse default exits 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="timefuse", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="seed for all stochastic steps")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    parser.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("TIMEFUSE_THREADS", "1")),
        help="worker threads for feature extraction (env TIMEFUSE_THREADS)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="meta-features of each window to CSV")
    p.add_argument("windows_csv")
    p.add_argument("out_csv")

    p = sub.add_parser("collect", help="package triplets into a shard file")
    p.add_argument("windows_csv")
    p.add_argument("predictions_dir")
    p.add_argument("truths_csv")
    p.add_argument("task_id")
    p.add_argument("out_shard")
    p.add_argument("--split", default="meta_train", choices=("meta_train", "meta_val", "test"))

    p = sub.add_parser("train", help="train a fusor on one or more shards")
    p.add_argument("shards", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--huber-delta", type=float, default=1.0)
    p.add_argument("--export-theta", metavar="CSV", default=None)

    p = sub.add_parser("fuse", help="fused forecasts for every sample of a shard")
    p.add_argument("model_json")
    p.add_argument("shard")
    p.add_argument("--out", required=True, help="raw float32 output (JSON sidecar beside it)")
    p.add_argument("--emit-weights", metavar="CSV", default=None)

    p = sub.add_parser("report", help="leaderboard and rank-first analysis CSVs")
    p.add_argument("shards", nargs="+")
    p.add_argument("--out", required=True)
    p.add_argument("--methods", default="fused,mean,median,best-individual")
    p.add_argument("--model", default=None)
    p.add_argument("--holdout", default=None, metavar="TASK")
    p.add_argument("--rank-out", default=None)
    return parser


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def cmd_extract(args) -> int:
    sample_ids, windows = interchange.read_windows_csv(args.windows_csv)
    features = extract_many(list(windows), threads=args.threads)
    lines = ["sample_id," + ",".join(FEATURE_NAMES)]
    for sid, row in zip(sample_ids, features):
        lines.append(sid + "," + ",".join(format(v, ".17g") for v in row))
    Path(args.out_csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _say(args, f"wrote {len(sample_ids)} feature rows to {args.out_csv}")
    return EXIT_OK


def cmd_collect(args) -> int:
    sample_ids, windows = interchange.read_windows_csv(args.windows_csv)
    truth_ids, truths = interchange.read_windows_csv(args.truths_csv)
    if truth_ids != sample_ids:
        raise RosterMismatch("windows and truths disagree on sample ids/order")
    roster = interchange.scan_prediction_dir(args.predictions_dir)
    stacks = {m: interchange.read_prediction_file(args.predictions_dir, m) for m in roster}
    n = len(sample_ids)
    for model, arr in stacks.items():
        if arr.shape[0] != n or arr.shape[1:] != truths.shape[1:]:
            raise RosterMismatch(
                f"model {model!r} predictions {arr.shape} do not align with "
                f"{n} truths of shape {truths.shape[1:]}"
            )
    feature_rows = extract_many(list(windows), threads=args.threads)
    samples = [
        MetaSample(
            feature_rows[i],
            PredictionTensor(
                np.stack([stacks[m][i] for m in roster]).astype(np.float64), tuple(roster)
            ),
            truths[i].astype(np.float64),
        )
        for i in range(n)
    ]
    shard = MetaShard.from_samples(args.task_id, args.split, samples)
    write_shard(shard, args.out_shard)
    _say(
        args,
        f"wrote shard {args.out_shard}: task={shard.task_id} split={shard.split} "
        f"n={shard.n_samples} k={shard.k} t_out={shard.t_out} d={shard.d}",
    )
    return EXIT_OK


def cmd_train(args) -> int:
    shards = [read_shard(p) for p in args.shards]
    joint = build_joint_dataset(shards, args.seed)
    batches_per_task = -(-joint.target_size // args.batch_size)
    for shard in joint.shards:
        _say(args, f"task {shard.task_id}: {shard.n_samples} samples, "
                   f"{batches_per_task} batches/epoch after balancing")
    config = TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        max_epochs=args.max_epochs,
        patience=args.patience,
        seed=args.seed,
        huber_delta=args.huber_delta,
    )

    def on_epoch(epoch: int, train_loss: float, val_loss: float) -> None:
        _say(args, f"epoch {epoch}: train={train_loss:.6f} val={val_loss:.6f}")

    model = train_fusor(joint, config, on_epoch=on_epoch)
    save_model(model, args.out)
    if args.export_theta:
        export_theta(model, args.export_theta, shards=shards)
    _say(args, f"selected epoch {model.selected_epoch}; wrote {args.out}")
    return EXIT_OK


def cmd_fuse(args) -> int:
    model = load_model(args.model_json)
    shard = read_shard(args.shard)
    fused = evaluation.fused_predictions(model, shard)
    out = Path(args.out)
    interchange.write_prediction_file(out.parent, out.stem, fused)
    if args.emit_weights:
        weights = predict_weights_batch(model, shard.features.astype(np.float64))
        lines = ["sample_index," + ",".join(model.roster)]
        for i, row in enumerate(weights):
            lines.append(f"{i}," + ",".join(format(v, ".17g") for v in row))
        Path(args.emit_weights).write_text("\n".join(lines) + "\n", encoding="utf-8")
    _say(args, f"wrote fused forecasts for {shard.n_samples} samples to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for method in methods:
        base = method.partition(":")[0]
        if base not in KNOWN_METHODS:
            raise UnknownMethod(f"unknown method {method!r}; known: {', '.join(KNOWN_METHODS)}")
        if base == "topk":
            arg = method.partition(":")[2]
            if not arg.isdigit() or int(arg) < 1:
                raise KOutOfRange(f"method {method!r} needs a positive size, e.g. topk:3")

    shards = [read_shard(p) for p in args.shards]
    model = load_model(args.model) if args.model else None
    if "fused" in methods and model is None and args.holdout is None:
        raise UnknownMethod("method 'fused' needs --model (or --holdout to train one)")

    config = TrainConfig(seed=args.seed)
    holdout_report = None
    if args.holdout is not None:
        holdout_report = evaluation.zero_shot_protocol(shards, args.holdout, config)
        if model is None and "fused" in methods:
            # reuse the jointly trained fusor for the plain 'fused' column
            joint = build_joint_dataset(
                [s for s in shards if s.split == "meta_train"], args.seed
            )
            model = train_fusor(joint, config)

    table = evaluation.evaluate_methods(shards, methods, model=model)
    if holdout_report is not None:
        row = table.setdefault(holdout_report.held_out_task, {})
        row["normal-fused"] = holdout_report.normal
        row["zeroshot-fused"] = holdout_report.zero_shot

    leaderboard = evaluation.leaderboard_csv(table)
    test_shards = [s for s in shards if s.split == "test"]
    rank_csv = evaluation.rank_first_csv(rank_first_analysis(test_shards, model=model))

    Path(args.out).write_text(leaderboard, encoding="utf-8")
    rank_path = args.rank_out or str(
        Path(args.out).with_name(Path(args.out).stem + "_rank.csv")
    )
    Path(rank_path).write_text(rank_csv, encoding="utf-8")
    _say(args, f"wrote {args.out} and {rank_path}")

    undefined = [
        (task, method)
        for task, row in table.items()
        for method, metrics in row.items()
        if metrics.mape is None
    ]
    if undefined:
        print(f"warning: MAPE undefined for {len(undefined)} cell(s)", file=sys.stderr)
        return EXIT_WARNINGS
    return EXIT_OK


_COMMANDS = {
    "extract": cmd_extract,
    "collect": cmd_collect,
    "train": cmd_train,
    "fuse": cmd_fuse,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (UnknownMethod, KOutOfRange) as exc:
        print(f"timefuse: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteLoss as exc:
        print(f"timefuse: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TimefuseError, OSError, ValueError) as exc:
        print(f"timefuse: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
