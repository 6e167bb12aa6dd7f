"""Precision / recall / F1 over labeled verdicts, plus the two baselines.

Conventions: an undefined precision (no predicted positives) or recall (no
actual positives) counts as 0 in a run before any averaging; F1 is 0 when
P + R is 0. The random baseline is averaged per metric across seeded runs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping

ALL_POSITIVE = "all_positive_baseline"
RANDOM = "random_baseline"


@dataclass(slots=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_record(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(slots=True)
class EvalReport:
    """Metrics for one method. ``counts`` is None for averaged reports."""

    method_name: str
    precision: float
    recall: float
    f1: float
    counts: ConfusionCounts | None = None
    note: str = ""

    def to_record(self) -> dict:
        record = {
            "method": self.method_name,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": self.counts.to_record() if self.counts else None,
        }
        if self.note:
            record["note"] = self.note
        return record


def confusion(
    predictions: Mapping[str, bool],
    truth: Mapping[str, bool],
) -> ConfusionCounts:
    """Count TP/FP/FN/TN over matching video id sets."""
    missing = sorted(set(truth) - set(predictions))
    extra = sorted(set(predictions) - set(truth))
    if missing or extra:
        raise ValueError(
            f"video id sets differ: missing predictions for {missing}, "
            f"unexpected predictions for {extra}"
        )
    counts = ConfusionCounts(tp=0, fp=0, fn=0, tn=0)
    for vid in truth:
        actual, predicted = truth[vid], predictions[vid]
        if actual and predicted:
            counts.tp += 1
        elif not actual and predicted:
            counts.fp += 1
        elif actual and not predicted:
            counts.fn += 1
        else:
            counts.tn += 1
    return counts


def metrics(counts: ConfusionCounts, method_name: str = "") -> EvalReport:
    """Precision = TP/(TP+FP), Recall = TP/(TP+FN), F1 = 2PR/(P+R); 0/0 -> 0."""
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(
        method_name=method_name, precision=precision, recall=recall, f1=f1, counts=counts
    )


def all_positive_baseline(truth: Mapping[str, bool]) -> EvalReport:
    """Score the classifier that marks every video a screencast."""
    if not truth:
        raise ValueError("all_positive_baseline needs a non-empty truth set")
    predictions = {vid: True for vid in truth}
    report = metrics(confusion(predictions, truth), method_name=ALL_POSITIVE)
    report.note = (
        "precision equals the positive prevalence of the truth set by definition: "
        f"{report.counts.tp}/{report.counts.total} = {report.precision:.4f}"
    )
    return report


def random_baseline(
    truth: Mapping[str, bool],
    p: float = 0.5,
    runs: int = 20,
    seed: int = 0,
) -> EvalReport:
    """Score the coin-flip classifier, averaged per metric across seeded runs."""
    if not truth:
        raise ValueError("random_baseline needs a non-empty truth set")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if runs < 1:
        raise ValueError("runs must be >= 1")

    video_ids = sorted(truth)
    rng = random.Random(seed)
    totals = {"precision": 0.0, "recall": 0.0, "f1": 0.0}
    for _ in range(runs):
        predictions = {vid: rng.random() < p for vid in video_ids}
        run_report = metrics(confusion(predictions, truth))
        totals["precision"] += run_report.precision
        totals["recall"] += run_report.recall
        totals["f1"] += run_report.f1
    return EvalReport(
        method_name=RANDOM,
        precision=totals["precision"] / runs,
        recall=totals["recall"] / runs,
        f1=totals["f1"] / runs,
        counts=None,
        note=f"mean of {runs} runs at p={p:g}, seed={seed}",
    )


def improvement_pct(tool_value: float, baseline_value: float) -> float | None:
    """Relative improvement (tool/baseline - 1) * 100; None when undefined."""
    if baseline_value == 0:
        return None
    return (tool_value / baseline_value - 1.0) * 100.0


def improvements(tool: EvalReport, baseline: EvalReport) -> dict:
    return {
        "versus": baseline.method_name,
        "recall_pct": improvement_pct(tool.recall, baseline.recall),
        "precision_pct": improvement_pct(tool.precision, baseline.precision),
        "f1_pct": improvement_pct(tool.f1, baseline.f1),
    }


def format_report_table(reports: list[EvalReport]) -> str:
    """Fixed-width table of method rows for terminal output."""
    lines = [
        f"{'Method':<24} {'Recall':>8} {'Precision':>10} {'F1':>8}  {'TP':>4} {'FP':>4} {'FN':>4} {'TN':>4}",
        "-" * 74,
    ]
    for report in reports:
        counts = report.counts
        c = (
            f"{counts.tp:>4} {counts.fp:>4} {counts.fn:>4} {counts.tn:>4}"
            if counts
            else f"{'-':>4} {'-':>4} {'-':>4} {'-':>4}"
        )
        lines.append(
            f"{report.method_name:<24} {report.recall:>8.4f} {report.precision:>10.4f} "
            f"{report.f1:>8.4f}  {c}"
        )
        if report.note:
            lines.append(f"    note: {report.note}")
    return "\n".join(lines)
