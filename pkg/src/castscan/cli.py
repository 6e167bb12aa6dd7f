"""Command-line interface: scan, evaluate, extract-frames, classify-frames, baseline.

Every sampling/decision/classifier knob lives in a flat JSON config file and
has a matching flag; flags win over the file. ``scan`` exits nonzero iff any
video failed, so large batches keep going but the failure is visible.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
from pathlib import Path

from castscan import pipeline
from castscan.classifier import make_classifier
from castscan.config import ScanConfig, build_config
from castscan.evaluation import all_positive_baseline, format_report_table, random_baseline
from castscan.frames import (
    SamplingMode,
    acquire_frames,
    list_image_files,
)
from castscan.manifest import load_manifest, truth_map
from castscan.similarity import mark_duplicates


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--manifest", type=Path, help="manifest file (one JSON record per line)")
    parser.add_argument("--config", type=Path, help="flat JSON config file")
    parser.add_argument("--out", type=Path, help="output path for the report")
    parser.add_argument("--interval", type=float, dest="interval_s", metavar="SECONDS",
                        help="sampling interval (default 30)")
    parser.add_argument("--dup-threshold", type=float, dest="dup_threshold", metavar="0..1",
                        help="NRMSE duplicate threshold (default 0.05)")
    parser.add_argument("--min-run", type=int, dest="min_run", metavar="N",
                        help="minimum eligible run length (default 4)")
    parser.add_argument("--min-ratio", type=float, dest="min_ratio", metavar="0..1",
                        help="minimum IDE ratio (default 0.5)")
    parser.add_argument("--classifier", metavar="KIND[:ARG]",
                        help="marker_oracle | constant:LABEL | sidecar:TABLE | worker:COMMAND")
    parser.add_argument("--seed", type=int, help="RNG seed (default 0)")
    parser.add_argument("--jobs", type=int, help="parallel videos (default: logical CPUs)")
    parser.add_argument("--cache-dir", dest="cache_dir", help="frame cache root")
    parser.add_argument("--decoder", help="decoder command template with {input} {fps} {outdir}")
    parser.add_argument("--timeout", type=float, dest="timeout_s", metavar="SECONDS",
                        help="worker request deadline (default 30)")
    parser.add_argument("--batch-size", type=int, dest="batch_size", metavar="N",
                        help="frames per classifier request (default 8)")


_CONFIG_KEYS = (
    "interval_s", "dup_threshold", "min_run", "min_ratio", "classifier",
    "seed", "jobs", "cache_dir", "decoder", "timeout_s", "batch_size",
)


def _config_from_args(args: argparse.Namespace) -> ScanConfig:
    overrides = {key: getattr(args, key, None) for key in _CONFIG_KEYS}
    return build_config(config_path=args.config, overrides=overrides)


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise SystemExit(f"error: missing required flags: {', '.join(missing)}")


def cmd_scan(args: argparse.Namespace) -> int:
    _require(args, "manifest")
    cfg = _config_from_args(args)
    report = pipeline.run_scan(args.manifest, cfg)

    out_path = args.out or pipeline.default_report_path("reports", cfg)
    pipeline.write_report(report, out_path)

    for record in report["records"]:
        if record["status"] == "ok":
            verdict = record["verdict"]
            tag = "screencast" if verdict["is_screencast"] else "other"
            print(
                f"{record['video_id']}: {tag}  "
                f"(run {verdict['longest_run']}, ratio {verdict['ratio']:.3f}, "
                f"{verdict['n_ide']}/{verdict['n_info']} IDE frames)"
            )
        else:
            print(f"{record['video_id']}: FAILED  {record['error']}")
    failures = report["failure_count"]
    print(f"\n{report['video_count']} video(s), {failures} failure(s); report: {out_path}")
    return 1 if failures else 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    _require(args, "manifest", "report")
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise SystemExit(f"error: cannot read scan report {args.report}: {err}") from err
    entries = load_manifest(args.manifest)
    evaluation = pipeline.run_evaluate(
        report, entries, runs=args.runs, p=args.p, seed=args.seed if args.seed is not None else 0
    )
    print(pipeline.format_evaluation(evaluation))
    if args.out:
        pipeline.write_report(evaluation, args.out)
        print(f"\nreport: {args.out}")
    return 0


def cmd_extract_frames(args: argparse.Namespace) -> int:
    _require(args, "source", "out")
    cfg = _config_from_args(args)
    mode = SamplingMode.training(
        interval_s=args.interval_s if args.interval_s is not None else 1.0,
        cap=args.cap,
        seed=cfg.seed,
    )
    seq = acquire_frames(
        args.source,
        mode,
        decoder=cfg.decoder_command(),
        workdir=Path(cfg.cache_dir) / "extract" if cfg.decoder else None,
    )
    keep = seq.frames
    if not args.keep_duplicates:
        marking = mark_duplicates(seq, cfg.dup_threshold)
        keep = [f for f, dup in zip(seq.frames, marking.duplicate_flags) if not dup]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for frame in keep:
        name = f"frame_{frame.timestamp_s:g}{frame.source_path.suffix.lower()}"
        shutil.copy2(frame.source_path, out_dir / name)
        written.append(name)
    (out_dir / "extraction.json").write_text(
        json.dumps(
            {
                "source": str(args.source),
                "mode": mode.key(),
                "dedup_threshold": None if args.keep_duplicates else cfg.dup_threshold,
                "frame_count": len(written),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    print(f"wrote {len(written)} frame(s) to {out_dir}")
    return 0


def cmd_classify_frames(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    paths: list[Path] = []
    for item in args.frames:
        item = Path(item)
        paths.extend(list_image_files(item) if item.is_dir() else [item])
    if not paths:
        raise SystemExit("error: no frames to classify")

    classifier = make_classifier(cfg.classifier_spec())
    try:
        labels = classifier.classify_batch(paths)
    finally:
        classifier.close()
    records = []
    for path, label in zip(paths, labels):
        print(f"{path}\t{label.label}\t{label.confidence:.4f}")
        records.append({"frame": str(path), "label": label.label, "confidence": label.confidence})
    if args.out:
        pipeline.write_report({"frames": records}, args.out)
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    _require(args, "manifest")
    entries = load_manifest(args.manifest)
    truth = truth_map(entries)
    seed = args.seed if args.seed is not None else 0
    reports = [
        random_baseline(truth, p=args.p, runs=args.runs, seed=seed),
        all_positive_baseline(truth),
    ]
    print(format_report_table(reports))
    if args.out:
        pipeline.write_report(
            {"schema": "castscan-baseline/1", "methods": [r.to_record() for r in reports]},
            args.out,
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="castscan",
        description="Identify live-coding screencasts among a set of videos.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", help="scan manifest videos and write verdicts")
    _add_shared_flags(p_scan)
    p_scan.set_defaults(func=cmd_scan)

    p_eval = sub.add_parser("evaluate", help="score a scan report against truth labels")
    _add_shared_flags(p_eval)
    p_eval.add_argument("--report", type=Path, help="scan report to evaluate")
    p_eval.add_argument("--runs", type=int, default=20, help="random-baseline repetitions")
    p_eval.add_argument("--p", type=float, default=0.5, help="random-baseline positive probability")
    p_eval.set_defaults(func=cmd_evaluate)

    p_extract = sub.add_parser("extract-frames", help="dense training-mode frame extraction")
    _add_shared_flags(p_extract)
    p_extract.add_argument("--source", type=Path, help="video file or frame directory")
    p_extract.add_argument("--cap", type=int, default=600, help="max frames kept (default 600)")
    p_extract.add_argument(
        "--keep-duplicates", action="store_true",
        help="keep near-duplicate frames instead of dropping them",
    )
    p_extract.set_defaults(func=cmd_extract_frames)

    p_classify = sub.add_parser("classify-frames", help="classify individual frames (debug)")
    _add_shared_flags(p_classify)
    p_classify.add_argument("frames", nargs="+", help="image files or directories")
    p_classify.set_defaults(func=cmd_classify_frames)

    p_base = sub.add_parser("baseline", help="baseline metrics for a labeled manifest")
    _add_shared_flags(p_base)
    p_base.add_argument("--runs", type=int, default=20, help="random-baseline repetitions")
    p_base.add_argument("--p", type=float, default=0.5, help="random-baseline positive probability")
    p_base.set_defaults(func=cmd_baseline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
