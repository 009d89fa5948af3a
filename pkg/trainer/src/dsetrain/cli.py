"""Training command line: dsetrain train classifier|projector <dataset> <out>."""

from __future__ import annotations

import argparse
import sys


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser():
    parser = _Parser(prog="dsetrain")
    sub = parser.add_subparsers(dest="command", required=True)
    tr = sub.add_parser("train", help="train a network and export its weights")
    tr.add_argument("kind", choices=["classifier", "projector"])
    tr.add_argument("dataset", nargs="+", help="one or more .dsepatch files")
    tr.add_argument("output", help="output .dsewght path")
    tr.add_argument("--epochs", type=int, default=30)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--batch-size", type=int, default=32)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--holdout", type=float, default=0.1)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _train(args)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def _train(args) -> int:
    from .datasets import concatenate_datasets, load_datasets
    from .export import export_weights
    from .train import TrainConfig, train_classifier, train_projector

    records = concatenate_datasets(load_datasets(args.dataset))
    config = TrainConfig(
        epochs=args.epochs,
        seed=args.seed,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        holdout_fraction=args.holdout,
    )
    if args.kind == "classifier":
        net, history = train_classifier(records, config)
    else:
        net, history = train_projector(records, config)
    export_weights(net, args.kind, args.output)
    last = history["train_loss"][-1] if history["train_loss"] else float("nan")
    hold = history["holdout_loss"][-1] if history["holdout_loss"] else None
    msg = f"trained {args.kind} on {len(records)} patches, final loss {last:.6g}"
    if hold is not None:
        msg += f" (holdout {hold:.6g})"
    print(msg)
    print(f"wrote {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
