"""Command line interface: train, eval, verify, bench, count-params.

Exit codes: 0 success (verify: all suites pass), 1 verify suite failure,
2 configuration/spec/format errors, 3 I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bench import run_bench
from .checkpoint import load_checkpoint, network_tensors, restore_network, save_checkpoint
from .data import load_cifar, subset_per_class
from .errors import (
    DegenerateDataError,
    FormatError,
    ParameterError,
    ShapeError,
    SpecError,
)
from .metrics import (
    BENCH_FIELDS,
    TRAIN_FIELDS,
    parse_shape,
    rows_to_csv,
    write_rows,
)
from .netgraph import build_network, count_params_layer, count_params_network, load_config
from .stft import build_basis, format_basis
from .train import TrainConfig, accuracy, standardize, train
from .verify import run_suites

METRICS_FILE = "metrics.csv"
CHECKPOINT_FILE = "final.ckpt"
STATS_MEAN = "data.channel_mean"
STATS_STD = "data.channel_std"


def _detect_variant(data_dir: str) -> int:
    """CIFAR-100 directories carry train.bin; CIFAR-10 carries batch files."""
    return 100 if os.path.exists(os.path.join(data_dir, "train.bin")) else 10


def _load_splits(args, train_subset: bool):
    train_ds, test_ds = load_cifar(args.data, _detect_variant(args.data))
    if args.classes is not None:
        train_ds = subset_per_class(train_ds, classes=args.classes)
        test_ds = subset_per_class(test_ds, classes=args.classes)
    if train_subset and args.subset is not None:
        train_ds = subset_per_class(train_ds, per_class=args.subset)
    return train_ds, test_ds


def _log_epoch(row) -> None:
    print(f"epoch {row['epoch']:>4}  loss {row['train_loss']:.4f}  "
          f"train {row['train_accuracy']:.4f}  test {row['test_accuracy']:.4f}  "
          f"({row['wall_clock_seconds']:.1f}s)")


def cmd_train(args) -> int:
    spec = load_config(args.config)
    seed = args.seed if args.seed is not None else spec.seed
    train_ds, test_ds = _load_splits(args, train_subset=True)
    net = build_network(spec, seed)
    cfg = TrainConfig(lr=args.lr, epochs1=args.epochs1, epochs2=args.epochs2,
                      batch1=args.batch1, batch2=args.batch2, seed=seed)
    rows, stats = train(net, train_ds, test_ds, cfg, log=_log_epoch)
    os.makedirs(args.out, exist_ok=True)
    metrics_path = os.path.join(args.out, METRICS_FILE)
    ckpt_path = os.path.join(args.out, CHECKPOINT_FILE)
    write_rows(metrics_path, TRAIN_FIELDS, rows)
    save_checkpoint(ckpt_path, network_tensors(net, {
        STATS_MEAN: stats[0],
        STATS_STD: stats[1],
    }))
    print(f"wrote {metrics_path} and {ckpt_path}")
    return 0


def cmd_eval(args) -> int:
    spec = load_config(args.config)
    net = build_network(spec, seed=0)
    extra = restore_network(net, load_checkpoint(args.checkpoint))
    if STATS_MEAN not in extra or STATS_STD not in extra:
        raise SpecError("checkpoint carries no normalization statistics")
    stats = (extra[STATS_MEAN], extra[STATS_STD])
    train_ds, test_ds = _load_splits(args, train_subset=args.split == "train")
    ds = train_ds if args.split == "train" else test_ds
    images = standardize(ds.images, stats)
    acc = accuracy(net, images, np.asarray(ds.labels, dtype=np.int64))
    print(f"{acc:.4f}")
    return 0


def cmd_verify(args) -> int:
    if args.dump_basis is not None:
        text = format_basis(build_basis(args.dump_basis))
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    results = run_suites(seed=args.seed, perturb_basis=args.perturb_basis)
    if args.json:
        print(json.dumps([r.as_dict() for r in results], indent=2))
    else:
        for r in results:
            status = "pass" if r.passed else "FAIL"
            print(f"{r.suite:<28} {status}  max error {r.max_error:.3e}  "
                  f"(tolerance {r.tolerance:.1e})")
    return 0 if all(r.passed for r in results) else 1


def cmd_bench(args) -> int:
    shapes = [parse_shape(s) for s in args.shape]
    rows = run_bench(args.n, shapes, reps=args.reps, seed=args.seed)
    text = rows_to_csv(BENCH_FIELDS, rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_count_params(args) -> int:
    spec = load_config(args.config)
    total, rows = count_params_network(spec)
    print(f"{'name':<24}{'kind':<12}{'params':>12}{'total':>12}")
    running = 0
    for name, kind, count in rows:
        running += count
        print(f"{name:<24}{kind:<12}{count:>12}{running:>12}")
    print(f"{'TOTAL':<24}{'':<12}{total:>24}")
    print()
    print("closed forms per spatial layer kind:")
    seen = set()
    for st in spec.stages:
        if (st.b, st.f) in seen:
            continue
        seen.add((st.b, st.f))
        c, f = st.b, st.f
        for n in spec.branches:
            std = count_params_layer("standard", c, n, f)
            dws = count_params_layer("depthwise_separable", c, n, f)
            print(f"  standard             c={c} n={n} f={f}: {std}")
            print(f"  depthwise_separable  c={c} n={n} f={f}: {dws}")
        stft = count_params_layer("stft_separable", c, spec.branches[0], f)
        print(f"  stft_separable       c={c} f={f} (any n): {stft}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="stftsep",
        description="Train, evaluate, verify, and benchmark fixed-filter-bank "
                    "separable convolution networks.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a network from a config")
    t.add_argument("--config", required=True, help="network config file")
    t.add_argument("--data", required=True, help="directory of CIFAR batch files")
    t.add_argument("--out", default=".", help="output directory")
    t.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    t.add_argument("--lr", type=float, default=0.01)
    t.add_argument("--epochs1", type=int, default=300,
                   help="epochs at the first batch size")
    t.add_argument("--epochs2", type=int, default=100,
                   help="epochs at the second batch size")
    t.add_argument("--batch1", type=int, default=64)
    t.add_argument("--batch2", type=int, default=128)
    t.add_argument("--subset", type=int, default=None,
                   help="cap training examples per class")
    t.add_argument("--classes", type=int, default=None,
                   help="keep only labels below this count")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("checkpoint", help="checkpoint file from train")
    e.add_argument("--config", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--split", choices=("train", "test"), default="test")
    e.add_argument("--subset", type=int, default=None,
                   help="per-class cap when evaluating the train split")
    e.add_argument("--classes", type=int, default=None)
    e.set_defaults(fn=cmd_eval)

    v = sub.add_parser("verify", help="run the self-check suites")
    v.add_argument("--json", action="store_true",
                   help="machine-readable per-suite report")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--perturb-basis", action="store_true",
                   help="fault-injection hook: corrupt one basis entry")
    v.add_argument("--dump-basis", type=int, default=None, metavar="N",
                   help="write the bank matrix for side N and exit")
    v.add_argument("--out", default=None, help="file for --dump-basis output")
    v.set_defaults(fn=cmd_verify)

    b = sub.add_parser("bench", help="benchmark the two forward paths")
    b.add_argument("--n", type=int, nargs="+", default=[3, 5, 7, 9])
    b.add_argument("--shape", nargs="+", default=["1x64x32x32", "1x8x128x128"],
                   help="input shapes as BxCxHxW")
    b.add_argument("--reps", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default=None, help="CSV file (default: stdout)")
    b.set_defaults(fn=cmd_bench)

    c = sub.add_parser("count-params", help="per-block parameter counts")
    c.add_argument("--config", required=True)
    c.set_defaults(fn=cmd_count_params)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (SpecError, FormatError, ParameterError, ShapeError,
            DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
