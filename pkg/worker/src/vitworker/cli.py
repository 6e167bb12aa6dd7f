"""Command-line entry points: fine-tune a model, serve or inspect an artifact."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .model import ArtifactError, load_artifact
from .serve import serve
from .train import TrainingConfig, fine_tune


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vit-worker",
        description="Vision-transformer frame classifier speaking the scanning "
        "gateway's stdin/stdout protocol",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fine-tune on directory-per-class frames")
    train.add_argument("--train-dir", required=True, type=Path)
    train.add_argument("--val-dir", required=True, type=Path)
    train.add_argument("--out", required=True, type=Path, help="artifact file to write")
    train.add_argument("--max-iterations", type=int, default=100)
    train.add_argument("--learning-rate", type=float, default=3e-3)
    train.add_argument("--batch-size", type=int, default=32)
    train.add_argument("--image-size", type=int, default=300)
    train.add_argument("--patch-size", type=int, default=30)
    train.add_argument("--layers", dest="num_layers", type=int, default=2)
    train.add_argument("--heads", dest="num_heads", type=int, default=4)
    train.add_argument("--hidden-dim", type=int, default=64)
    train.add_argument("--mlp-dim", type=int, default=128)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument(
        "--pretrained-checkpoint",
        type=Path,
        default=None,
        help="state_dict to warm-start from; must match the configured architecture",
    )

    srv = sub.add_parser("serve", help="answer classify requests over stdin/stdout")
    srv.add_argument("--artifact", required=True, type=Path)

    inspect = sub.add_parser("inspect", help="print an artifact's metadata as JSON")
    inspect.add_argument("--artifact", required=True, type=Path)

    return parser


def cmd_train(args: argparse.Namespace) -> int:
    config = TrainingConfig(
        train_dir=args.train_dir,
        val_dir=args.val_dir,
        max_iterations=args.max_iterations,
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        image_size=args.image_size,
        patch_size=args.patch_size,
        num_layers=args.num_layers,
        num_heads=args.num_heads,
        hidden_dim=args.hidden_dim,
        mlp_dim=args.mlp_dim,
        seed=args.seed,
        pretrained_checkpoint=args.pretrained_checkpoint,
    )
    artifact = fine_tune(config)
    path = artifact.save(args.out)
    print(
        f"saved {path} (val accuracy {artifact.metadata['val_accuracy']:.4f}, "
        f"{artifact.metadata['steps_run']} steps)"
    )
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    artifact = load_artifact(args.artifact)
    print(json.dumps({"classes": artifact.classes, "metadata": artifact.metadata}, indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    # keep stdout clean for the protocol; all diagnostics go to stderr
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "serve":
            return serve(args.artifact)
        return cmd_inspect(args)
    except (ArtifactError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
