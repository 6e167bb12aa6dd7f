"""Scan orchestration: manifests in, per-video verdict records out.

Videos are processed by a bounded thread pool; each video's stages (sample,
dedup, classify, decide) run sequentially and are timed. A failing video is
recorded as failed and never aborts the batch. Record order follows the
manifest regardless of completion order, so identical inputs produce
identical report bytes (timing fields aside).
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from castscan import cache
from castscan.classifier import FrameClassifier, make_classifier
from castscan.config import ScanConfig, config_hash
from castscan.decision import FrameAnnotation, decide
from castscan.evaluation import (
    EvalReport,
    all_positive_baseline,
    confusion,
    format_report_table,
    improvements,
    metrics,
    random_baseline,
)
from castscan.frames import (
    DecodeError,
    EmptySourceError,
    enumerate_candidates,
    load_sequence,
    select_samples,
)
from castscan.manifest import ManifestEntry, load_manifest, truth_map

SCAN_SCHEMA = "castscan-scan/1"
EVAL_SCHEMA = "castscan-eval/1"
TOOL_METHOD = "castscan"


def _candidates_for(entry: ManifestEntry, cfg: ScanConfig) -> tuple[list, int, bool]:
    """(candidates, candidate_count, from_cache) for a manifest entry."""
    mode = cfg.sampling_mode()
    source = entry.source
    if source.is_dir():
        candidates = enumerate_candidates(source, mode.interval_s, naming="auto")
        return candidates, len(candidates), False
    if source.is_file():
        decoder = cfg.decoder_command()
        if decoder is None:
            raise DecodeError(
                f"source {source} is a video file but no decoder command is configured"
            )
        frames_dir = cache.cache_frames(source, mode, decoder, Path(cfg.cache_dir))
        candidates = enumerate_candidates(frames_dir, mode.interval_s, naming="ordinal")
        return candidates, len(candidates), True
    raise DecodeError(f"source not found: {source}")


def scan_video(entry: ManifestEntry, cfg: ScanConfig, classifier: FrameClassifier) -> dict:
    """Run the full per-video pipeline and return its scan record."""
    from castscan.similarity import mark_duplicates

    t_start = time.perf_counter()
    mode = cfg.sampling_mode()

    candidates, candidate_count, from_cache = _candidates_for(entry, cfg)
    selected = select_samples(candidates, mode)
    if not selected:
        raise EmptySourceError(f"source {entry.source} yielded no frames")
    try:
        seq = load_sequence(selected, mode, video_id=entry.video_id)
    except DecodeError:
        if not from_cache:
            raise
        # a corrupt cache entry is rebuilt once, then the failure is real
        fingerprint = cache.source_fingerprint(entry.source)
        cache.invalidate(cache.entry_dir(Path(cfg.cache_dir), fingerprint, mode))
        candidates, candidate_count, _ = _candidates_for(entry, cfg)
        selected = select_samples(candidates, mode)
        seq = load_sequence(selected, mode, video_id=entry.video_id)
    t_sampled = time.perf_counter()

    marking = mark_duplicates(seq, cfg.dup_threshold)
    t_deduped = time.perf_counter()

    informative = [f for f, dup in zip(seq.frames, marking.duplicate_flags) if not dup]
    labels = classifier.classify_batch(informative) if informative else []
    by_index = {frame.index: label for frame, label in zip(informative, labels)}
    t_classified = time.perf_counter()

    annotations = [
        FrameAnnotation(index=f.index, duplicate=dup, label=by_index.get(f.index))
        for f, dup in zip(seq.frames, marking.duplicate_flags)
    ]
    verdict = decide(annotations, cfg.decision_params(), video_id=entry.video_id)
    t_done = time.perf_counter()

    frame_records = []
    for frame, ann in zip(seq.frames, annotations):
        label = ann.label
        frame_records.append(
            {
                "index": ann.index,
                "timestamp_s": frame.timestamp_s,
                "duplicate": ann.duplicate,
                "reference_index": marking.reference_indices.get(ann.index),
                "label": label.label if label else None,
                "confidence": label.confidence if label else None,
            }
        )

    return {
        "video_id": entry.video_id,
        "status": "ok",
        "verdict": verdict.to_record(),
        "frames": frame_records,
        "classifier_kind": cfg.classifier_spec().kind,
        "params": {
            "min_run": cfg.min_run,
            "min_ratio": cfg.min_ratio,
            "dup_threshold": cfg.dup_threshold,
            "interval_s": cfg.interval_s,
        },
        "stats": {
            "candidate_count": candidate_count,
            "sampled_count": len(seq.frames),
            "classified_count": len(informative),
        },
        "timing": {
            "sample_s": t_sampled - t_start,
            "dedup_s": t_deduped - t_sampled,
            "classify_s": t_classified - t_deduped,
            "decide_s": t_done - t_classified,
            "total_s": t_done - t_start,
        },
    }


def _scan_job(entry: ManifestEntry, cfg: ScanConfig, shared: FrameClassifier | None) -> dict:
    spec = cfg.classifier_spec()
    classifier = shared if shared is not None else make_classifier(spec)
    try:
        return scan_video(entry, cfg, classifier)
    except Exception as err:  # per-video isolation: record, never abort the batch
        return {
            "video_id": entry.video_id,
            "status": "failed",
            "error": f"{type(err).__name__}: {err}",
        }
    finally:
        if shared is None:
            classifier.close()


def run_scan(manifest_path: Path | str, cfg: ScanConfig) -> dict:
    """Scan every manifest video and assemble the report (records in manifest order)."""
    cfg.validate()
    entries = load_manifest(manifest_path)
    spec = cfg.classifier_spec()

    # worker sessions are pooled one per parallel video; pure kinds are shared
    shared = make_classifier(spec) if spec.kind != "worker" else None
    try:
        if entries:
            with ThreadPoolExecutor(max_workers=cfg.effective_jobs()) as pool:
                futures = [pool.submit(_scan_job, e, cfg, shared) for e in entries]
                records = [f.result() for f in futures]
        else:
            records = []
    finally:
        if shared is not None:
            shared.close()

    failures = sum(1 for r in records if r["status"] != "ok")
    return {
        "schema": SCAN_SCHEMA,
        "started_at": datetime.now(timezone.utc).isoformat(),
        "config": cfg.to_record(),
        "config_hash": config_hash(cfg),
        "video_count": len(records),
        "failure_count": failures,
        "records": records,
    }


def scan_predictions(report: dict) -> dict[str, bool]:
    """Verdicts by video id for every successfully scanned video."""
    return {
        r["video_id"]: bool(r["verdict"]["is_screencast"])
        for r in report.get("records", [])
        if r.get("status") == "ok"
    }


def run_evaluate(
    report: dict,
    entries: list[ManifestEntry],
    runs: int = 20,
    p: float = 0.5,
    seed: int = 0,
) -> dict:
    """Score the scan against truth labels, alongside both baselines."""
    truth = truth_map(entries)
    predictions = scan_predictions(report)
    unscanned = sorted(set(truth) - set(predictions))
    if unscanned:
        raise ValueError(
            f"manifest videos without a successful scan verdict: {unscanned}"
        )
    predictions = {vid: predictions[vid] for vid in truth}

    tool = metrics(confusion(predictions, truth), method_name=TOOL_METHOD)
    rand = random_baseline(truth, p=p, runs=runs, seed=seed)
    allpos = all_positive_baseline(truth)

    return {
        "schema": EVAL_SCHEMA,
        "video_count": len(truth),
        "truth_positives": sum(truth.values()),
        "truth_negatives": len(truth) - sum(truth.values()),
        "methods": [tool.to_record(), rand.to_record(), allpos.to_record()],
        "improvements": [improvements(tool, rand), improvements(tool, allpos)],
    }


def eval_reports(evaluation: dict) -> list[EvalReport]:
    """Rehydrate EvalReport rows from an evaluation record (for table output)."""
    from castscan.evaluation import ConfusionCounts

    rows = []
    for m in evaluation["methods"]:
        counts = ConfusionCounts(**m["counts"]) if m.get("counts") else None
        rows.append(
            EvalReport(
                method_name=m["method"],
                precision=m["precision"],
                recall=m["recall"],
                f1=m["f1"],
                counts=counts,
                note=m.get("note", ""),
            )
        )
    return rows


def format_evaluation(evaluation: dict) -> str:
    lines = [format_report_table(eval_reports(evaluation)), ""]
    for imp in evaluation["improvements"]:
        parts = []
        for metric in ("recall", "precision", "f1"):
            value = imp[f"{metric}_pct"]
            parts.append(f"{metric} {value:+.2f}%" if value is not None else f"{metric} n/a")
        lines.append(f"{TOOL_METHOD} vs {imp['versus']}: " + ", ".join(parts))
    return "\n".join(lines)


def write_report(report: dict, out_path: Path | str) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return out_path


def default_report_path(out_dir: Path | str, cfg: ScanConfig, kind: str = "scan") -> Path:
    """Append-only naming: timestamp plus config hash."""
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    return Path(out_dir) / f"{kind}-{stamp}-{config_hash(cfg)}.json"
