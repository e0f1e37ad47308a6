"""Harness CLI: train and infer subcommands, flag style matching hipmetrics."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .config import TrainConfig
from .infer import infer
from .train import load_checkpoint, train


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hipharness",
        description="Training/inference harness for hip landmark heatmap regression",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a detector on an annotated cohort")
    p.add_argument("images_dir")
    p.add_argument("annotations")
    p.add_argument("out_dir")
    p.add_argument("--split-manifest", default=None,
                   help="CSV from `hipmetrics split`; trains on 'train', "
                        "early-stops on 'val'")
    p.add_argument("--input-size", type=int, default=512)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--max-epochs", type=int, default=200)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--no-augment", action="store_true")
    p.add_argument("--pretrained", action="store_true",
                   help="ImageNet encoder init (downloads weights)")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("infer", help="export per-view heatmap files")
    p.add_argument("checkpoint")
    p.add_argument("images_dir")
    p.add_argument("annotations")
    p.add_argument("out_dir")
    p.add_argument("--tta-views", type=int, default=1)
    p.add_argument("--split-manifest", default=None)
    p.add_argument("--partition", default=None,
                   choices=["train", "val", "test"])
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "train":
        config = TrainConfig(
            input_size=args.input_size,
            lr=args.lr,
            batch_size=args.batch_size,
            max_epochs=args.max_epochs,
            max_steps=args.max_steps,
            early_stop_patience=args.patience,
            augment=not args.no_augment,
            pretrained_encoder=args.pretrained,
            seed=args.seed,
        )
        ckpt = train(args.images_dir, args.annotations, args.out_dir,
                     config, split_manifest=args.split_manifest)
        print(ckpt)
        return 0
    if args.command == "infer":
        model, config = load_checkpoint(args.checkpoint)
        paths = infer(model, args.images_dir, args.annotations, args.out_dir,
                      config, tta_views=args.tta_views, seed=args.seed,
                      split_manifest=args.split_manifest,
                      partition=args.partition)
        print(f"{len(paths)} heatmap files -> {args.out_dir}")
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
